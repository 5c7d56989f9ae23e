#pragma once

#include "core/ast.hpp"

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace ovql::oql {

// Key-value inventory of a query. Exists-style filters contribute a key only;
// matchers with a value side contribute the key, the value text verbatim, and
// the (key, value) pair.
struct KvSet {
    std::set<std::pair<std::string, std::string>> pairs;
    std::set<std::string> keys;
    std::set<std::string> values;

    bool empty() const { return pairs.empty() && keys.empty() && values.empty(); }
    bool operator==(const KvSet&) const = default;
};

KvSet extract_kv(const QueryAst& ast);

// Canonical template string: keys/values -> <K>/<V>, set names -> <S>,
// digits -> <N>, macro arguments -> <A>, whitespace collapsed.
std::string normalize_template(const QueryAst& ast);

// ---- syntax feature taxonomy ----

enum class Feature : std::uint8_t {
    // settings
    Timeout,
    ElementLimit,
    OutputFormat,
    BboxSetting,
    DateSetting,
    DiffSetting,
    // block statements
    Union,
    Difference,
    If,
    ForEach,
    For,
    Complete,
    Retro,
    Compare,
    // standalone statements
    Out,
    Item,
    RecurseUp,
    RecurseUpRelations,
    RecurseDown,
    RecurseDownRelations,
    IsIn,
    Timeline,
    Local,
    Convert,
    Make,
    QueryStatement,
    QueryFilter,
    // filters
    ByTag,
    BboxFilter,
    RecurseBy,
    ByWayCount,
    ByInputSet,
    ByElementId,
    Around,
    ByPolygon,
    Newer,
    ByDateOfChange,
    ByUser,
    ByArea,
    AreaPivot,
    ConditionalFilter,
};

inline constexpr std::size_t kFeatureCount = 41;

struct FeatureInfo {
    Feature id;
    const char* key;      // stable machine name
    const char* display;  // human-readable name
    const char* group;    // Settings / Block Statements / Standalone Statements / Filters
};

const std::array<FeatureInfo, kFeatureCount>& feature_taxonomy();
const FeatureInfo& feature_info(Feature f);

class FeatureSet {
public:
    void set(Feature f) { bits_[static_cast<std::size_t>(f)] = true; }
    bool test(Feature f) const { return bits_[static_cast<std::size_t>(f)]; }
    std::size_t count() const;
    std::vector<Feature> to_list() const;

    bool operator==(const FeatureSet&) const = default;

private:
    std::array<bool, kFeatureCount> bits_{};
};

// One flag per taxonomy entry present anywhere in the query. Detection rules:
// settings by name; statements and filters by their AST variant; ByInputSet
// additionally covers statements reading a named or default input set
// (out / item / recurse / is_in / set-prefixed statements).
FeatureSet detect_features(const QueryAst& ast);

// Each comment found in the text, paired with the whole query text with all
// comments stripped (outer whitespace trimmed). Comment text excludes the
// delimiters and is trimmed.
std::vector<std::pair<std::string, std::string>> extract_comments(std::string_view text);

}  // namespace ovql::oql
