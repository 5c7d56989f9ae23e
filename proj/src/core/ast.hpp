#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ovql::oql {

struct RawQuery {
    std::string text;
    std::string id;  // optional, empty when absent
};

enum class MacroKind { Bbox, GeocodeArea, GeocodeCoords, GeocodeId, Other };

struct TurboMacro {
    MacroKind kind = MacroKind::Other;
    std::string name;      // e.g. "geocodeArea"
    std::string argument;  // unquoted argument text, empty if none
    std::string raw;       // full source text including the braces

    bool operator==(const TurboMacro&) const = default;
};

MacroKind classify_macro(std::string_view name);
TurboMacro parse_macro_token(std::string_view raw);

enum class TagMatch { Exists, NotExists, Equals, NotEquals, Regex, NotRegex, KeyRegex };

struct TagFilter {
    TagMatch match = TagMatch::Exists;
    std::string key;    // key text, or key pattern for KeyRegex
    std::string value;  // value or pattern text, stored verbatim; empty for exists forms
    bool case_insensitive = false;
    bool key_quoted = true;
    bool value_quoted = true;

    bool operator==(const TagFilter&) const = default;
};

enum class ElementKind { Node, Way, Relation, Nwr, Area, Derived };

const char* element_kind_name(ElementKind k);

// ---- Filters ----

struct ByTagFilter {
    TagFilter tag;
    bool operator==(const ByTagFilter&) const = default;
};

struct BoundingBoxFilter {
    std::string coords;  // "south,west,north,east" raw text; empty when macro
    std::optional<TurboMacro> macro;
    bool operator==(const BoundingBoxFilter&) const = default;
};

struct ByAreaFilter {
    std::string set_name;  // (area.s)
    std::string area_id;   // (area:123)
    bool operator==(const ByAreaFilter&) const = default;
};

struct AreaPivotFilter {
    std::string set_name;
    bool operator==(const AreaPivotFilter&) const = default;
};

struct ByInputSetFilter {
    std::string set_name;
    bool operator==(const ByInputSetFilter&) const = default;
};

struct ByElementIdFilter {
    std::vector<std::string> ids;
    bool id_prefix = false;  // (id:1,2,3) vs (123)
    bool operator==(const ByElementIdFilter&) const = default;
};

struct AroundFilter {
    std::string set_name;  // around.peaks
    std::string radius;    // raw number text
    std::string tail;      // raw remainder incl. leading comma: ",lat,lon", macros allowed
    bool operator==(const AroundFilter&) const = default;
};

struct ByPolygonFilter {
    std::string poly;  // unquoted "lat lon ..." text
    bool operator==(const ByPolygonFilter&) const = default;
};

struct NewerFilter {
    std::string date;  // raw argument text, quoted date or macro
    bool operator==(const NewerFilter&) const = default;
};

struct ByDateOfChangeFilter {
    std::vector<std::string> dates;  // raw argument texts
    bool operator==(const ByDateOfChangeFilter&) const = default;
};

struct ByUserFilter {
    std::vector<std::string> names;  // user names or uid numbers, raw
    bool by_uid = false;
    bool operator==(const ByUserFilter&) const = default;
};

struct RecurseByFilter {
    std::string mode;  // n, w, r, bn, bw, br
    std::string set_name;
    std::string role;  // unquoted role text, empty when absent
    bool has_role = false;
    bool operator==(const RecurseByFilter&) const = default;
};

struct ByWayCountFilter {
    std::string text;  // raw inside parens: way_cnt... / way_link...
    bool operator==(const ByWayCountFilter&) const = default;
};

struct ConditionalQueryFilter {
    std::string expr;  // raw text after "if:" up to the matching paren
    bool operator==(const ConditionalQueryFilter&) const = default;
};

using Filter =
    std::variant<ByTagFilter, BoundingBoxFilter, ByAreaFilter, AreaPivotFilter, ByInputSetFilter,
                 ByElementIdFilter, AroundFilter, ByPolygonFilter, NewerFilter,
                 ByDateOfChangeFilter, ByUserFilter, RecurseByFilter, ByWayCountFilter,
                 ConditionalQueryFilter>;

// ---- Statements ----

struct Statement;

struct QueryStatement {
    ElementKind kind = ElementKind::Nwr;
    std::string spelling;  // source keyword: node/way/rel/relation/nwr/nw/...; empty for the
                           // filter-only query form
    std::vector<Filter> filters;
    std::vector<std::string> input_sets;  // names of ByInputSet filters, in order
    std::string output_set;
    bool operator==(const QueryStatement&) const = default;
};

struct UnionStatement {
    std::vector<Statement> members;
    std::string output_set;
    bool operator==(const UnionStatement&) const = default;
};

struct DifferenceStatement {
    std::vector<Statement> members;  // members[0] minus the rest
    std::string output_set;
    bool operator==(const DifferenceStatement&) const = default;
};

struct IfStatement {
    std::string condition;  // raw evaluator text
    std::vector<Statement> then_body;
    std::vector<Statement> else_body;
    bool has_else = false;
    bool operator==(const IfStatement&) const = default;
};

struct ForStatement {
    std::string input_set;
    std::string output_set;
    std::string expr;
    std::vector<Statement> body;
    bool operator==(const ForStatement&) const = default;
};

struct ForEachStatement {
    std::string input_set;
    std::string output_set;
    std::vector<Statement> body;
    bool operator==(const ForEachStatement&) const = default;
};

struct CompleteStatement {
    std::string limit;  // raw number text, empty when absent
    std::string input_set;
    std::string output_set;
    std::vector<Statement> body;
    bool operator==(const CompleteStatement&) const = default;
};

struct RetroStatement {
    std::string expr;
    std::vector<Statement> body;
    bool operator==(const RetroStatement&) const = default;
};

struct CompareStatement {
    std::string input_set;
    std::string output_set;
    std::string delta_expr;  // raw text inside (delta:...), empty when absent
    std::vector<Statement> body;
    bool has_body = false;
    bool operator==(const CompareStatement&) const = default;
};

struct OutStatement {
    std::string input_set;
    std::vector<std::string> params;  // raw parameter chunks in source order
    bool operator==(const OutStatement&) const = default;
};

enum class RecurseDir { Down, DownRelations, Up, UpRelations };

struct RecurseStatement {
    RecurseDir dir = RecurseDir::Down;
    std::string input_set;
    std::string output_set;
    bool operator==(const RecurseStatement&) const = default;
};

struct IsInStatement {
    std::string input_set;
    std::string output_set;
    std::string coords;  // raw "lat,lon" when given
    bool operator==(const IsInStatement&) const = default;
};

struct ItemStatement {
    std::string set_name;
    std::string output_set;
    bool operator==(const ItemStatement&) const = default;
};

struct ConvertStatement {
    std::string type_name;
    std::vector<std::string> clauses;  // raw "key=expr" chunks
    bool operator==(const ConvertStatement&) const = default;
};

struct MakeStatement {
    std::string type_name;
    std::vector<std::string> clauses;
    bool operator==(const MakeStatement&) const = default;
};

struct TimelineStatement {
    std::vector<std::string> args;
    std::string output_set;
    bool operator==(const TimelineStatement&) const = default;
};

struct LocalStatement {
    std::string args;  // raw text after the keyword, up to ';'
    bool operator==(const LocalStatement&) const = default;
};

// Overpass Turbo macro used in statement position, e.g. {{geocodeArea:"X"}}->.a;
struct MacroStatement {
    TurboMacro macro;
    std::string output_set;
    bool operator==(const MacroStatement&) const = default;
};

// Unrecognized but balanced construct, preserved verbatim.
struct OpaqueStatement {
    std::string text;
    bool operator==(const OpaqueStatement&) const = default;
};

using StatementNode =
    std::variant<QueryStatement, UnionStatement, DifferenceStatement, IfStatement, ForStatement,
                 ForEachStatement, CompleteStatement, RetroStatement, CompareStatement,
                 OutStatement, RecurseStatement, IsInStatement, ItemStatement, ConvertStatement,
                 MakeStatement, TimelineStatement, LocalStatement, MacroStatement,
                 OpaqueStatement>;

struct Statement {
    StatementNode node;
    bool operator==(const Statement&) const = default;
};

struct Setting {
    std::string name;
    std::string value;  // raw text after ':', may be empty
    bool operator==(const Setting&) const = default;
};

struct QueryAst {
    std::vector<Setting> settings;
    std::vector<Statement> statements;
    bool operator==(const QueryAst&) const = default;
};

// ---- Serialization ----

struct SerializeOptions {
    // Template mode replaces tag keys/values, set names, digits and macro
    // arguments with placeholders and collapses whitespace.
    bool template_mode = false;
};

std::string serialize(const QueryAst& ast, const SerializeOptions& opts = {});
std::string serialize(const Statement& st, const SerializeOptions& opts = {});

std::string escape_string(std::string_view content, char quote = '"');

inline constexpr std::string_view kKeyPlaceholder = "⟨K⟩";
inline constexpr std::string_view kValuePlaceholder = "⟨V⟩";
inline constexpr std::string_view kSetPlaceholder = "⟨S⟩";
inline constexpr std::string_view kNumberPlaceholder = "⟨N⟩";
inline constexpr std::string_view kArgPlaceholder = "⟨A⟩";

}  // namespace ovql::oql
