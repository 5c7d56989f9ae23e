#pragma once

// Shared example queries used across the test suites. The peaks query is the
// toolkit's running example; the castle and refine queries mirror typical
// Overpass Turbo usage patterns (geocodeArea headers, bbox unions, regex
// filters).

namespace fixtures {

inline constexpr const char* kPeaksQuery =
    "[out:json][timeout:200];\n"
    "{{geocodeArea:\"Troms\"}}->.searchArea;\n"
    "node[\"natural\"=\"peak\"](area.searchArea)->.peaks;\n"
    "way[\"highway\"=\"cycleway\"](area.searchArea)(around.peaks:500);\n"
    "out;";

inline constexpr const char* kCastleAreaQuery =
    "[out:xml][timeout:500];area[\"name\"=\"Deutschland\"][\"admin_level\"]->.a;\n"
    "(node[\"historic\"=\"castle\"](area.a);way[\"historic\"=\"castle\"](area.a);\n"
    "relation[\"historic\"=\"castle\"](area.a););";

inline constexpr const char* kCastleBeneluxQuery =
    "[out:json][timeout:120];(({{geocodeArea:\"Belgium\"}}->.be;{{geocodeArea:\"Luxembourg\"}}->"
    ".lu;\n{{geocodeArea:\"Nederland\"}}->.nl;)->.benelux;\n"
    "(node[\"historic\"=\"castle\"][\"name\"](area.benelux);););out center;";

inline constexpr const char* kCastleBboxQuery =
    "[out:json][timeout:25];(node[\"historic\"=\"castle\"]({{bbox}});way[\"historic\"=\"castle\"]"
    "({{bbox}});\nrelation[\"historic\"=\"castle\"]({{bbox}}););out;>;out skel qt;";

inline constexpr const char* kCastleTuscanyQuery =
    "[out:json][timeout:250];{{geocodeArea:\"Tuscany\"}}->.searchArea;\n"
    "(node[\"historic\"=\"castle\"](area.searchArea);way[\"historic\"=\"castle\"](area."
    "searchArea);\nrelation[\"historic\"=\"castle\"](area.searchArea););out;>;out skel qt;";

// difference + around with geocodeCoords, the "cities near Moscow" pattern
inline constexpr const char* kMoscowRingQuery =
    "[out:json][timeout:25]; ( node[\"place\"=\"city\"](around:300000,{{geocodeCoords:\"Moscow\"}}"
    ");\nnode[\"place\"=\"town\"](around:300000,{{geocodeCoords:\"Moscow\"}}); ) ->.all; \n"
    "( .all; - node[\"place\"~\"city|town\"](around:100000,{{geocodeCoords:\"Moscow\"}}););out "
    "center;";

// same query with the misplaced "; ->" that Overpass rejects server-side
inline constexpr const char* kMoscowRingBrokenQuery =
    "[out:json][timeout:25];(node[\"place\"=\"city\"](around:300000,{{geocodeCoords:\"Moscow\"}});"
    "\nnode[\"place\"=\"town\"](around:300000,{{geocodeCoords:\"Moscow\"}}); ); ->.all;\n"
    "(.all; - node[\"place\"~\"city|town\"](around:100000,{{geocodeCoords:\"Moscow\"}}););out "
    "center;";

inline constexpr const char* kPharmacyRegexQuery =
    "[out:json][timeout:120];{{geocodeArea:\"Wroc\xC5\x82"
    "aw\"}}->.searchArea;(\n"
    "node[\"amenity\"=\"pharmacy\"][\"name\"~\"Apteka\",i](area.searchArea);\n"
    "way[\"amenity\"=\"pharmacy\"][\"name\"~\"Apteka\",i](area.searchArea);\n"
    "relation[\"amenity\"=\"pharmacy\"][\"name\"~\"Apteka\",i](area.searchArea);\n"
    ");out;>;out meta qt;";

inline constexpr const char* kSubwayBboxQuery =
    "[out:json][timeout:25];(\nnode[\"railway\"=\"subway_entrance\"]({{bbox}});\n"
    "way[\"railway\"=\"subway_entrance\"]({{bbox}});\n"
    "relation[\"railway\"=\"subway_entrance\"]({{bbox}});\n);out;>;out skel qt;";

}  // namespace fixtures
