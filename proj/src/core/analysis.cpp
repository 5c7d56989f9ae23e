#include "core/analysis.hpp"

#include "core/lexer.hpp"
#include "core/text.hpp"

namespace ovql::oql {

namespace {

template <typename Fn>
void walk_statements(const std::vector<Statement>& stmts, Fn&& fn);

template <typename Fn>
void walk_statement(const Statement& st, Fn&& fn) {
    fn(st);
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, UnionStatement> ||
                          std::is_same_v<T, DifferenceStatement>) {
                walk_statements(node.members, fn);
            } else if constexpr (std::is_same_v<T, IfStatement>) {
                walk_statements(node.then_body, fn);
                walk_statements(node.else_body, fn);
            } else if constexpr (std::is_same_v<T, ForStatement> ||
                                 std::is_same_v<T, ForEachStatement> ||
                                 std::is_same_v<T, CompleteStatement> ||
                                 std::is_same_v<T, RetroStatement> ||
                                 std::is_same_v<T, CompareStatement>) {
                walk_statements(node.body, fn);
            }
        },
        st.node);
}

template <typename Fn>
void walk_statements(const std::vector<Statement>& stmts, Fn&& fn) {
    for (const auto& st : stmts) walk_statement(st, fn);
}

}  // namespace

KvSet extract_kv(const QueryAst& ast) {
    KvSet kv;
    auto add_tag = [&](const TagFilter& t) {
        kv.keys.insert(t.key);
        switch (t.match) {
            case TagMatch::Exists:
            case TagMatch::NotExists:
                break;
            case TagMatch::Equals:
            case TagMatch::NotEquals:
            case TagMatch::Regex:
            case TagMatch::NotRegex:
            case TagMatch::KeyRegex:
                kv.values.insert(t.value);
                kv.pairs.insert({t.key, t.value});
                break;
        }
    };
    walk_statements(ast.statements, [&](const Statement& st) {
        if (const auto* q = std::get_if<QueryStatement>(&st.node)) {
            for (const auto& f : q->filters) {
                if (const auto* tf = std::get_if<ByTagFilter>(&f)) add_tag(tf->tag);
            }
        }
    });
    return kv;
}

std::string normalize_template(const QueryAst& ast) {
    SerializeOptions opts;
    opts.template_mode = true;
    return serialize(ast, opts);
}

const std::array<FeatureInfo, kFeatureCount>& feature_taxonomy() {
    static const std::array<FeatureInfo, kFeatureCount> kTable = {{
        {Feature::Timeout, "timeout", "Timeout", "Settings"},
        {Feature::ElementLimit, "element_limit", "Element Limit", "Settings"},
        {Feature::OutputFormat, "output_format", "Output Format", "Settings"},
        {Feature::BboxSetting, "bbox_setting", "Bounding Box", "Settings"},
        {Feature::DateSetting, "date_setting", "Date", "Settings"},
        {Feature::DiffSetting, "diff_setting", "Diff/adiff two dates", "Settings"},
        {Feature::Union, "union", "Union", "Block Statements"},
        {Feature::Difference, "difference", "Difference", "Block Statements"},
        {Feature::If, "if", "if", "Block Statements"},
        {Feature::ForEach, "foreach", "for-each", "Block Statements"},
        {Feature::For, "for", "for", "Block Statements"},
        {Feature::Complete, "complete", "complete", "Block Statements"},
        {Feature::Retro, "retro", "retro", "Block Statements"},
        {Feature::Compare, "compare", "compare", "Block Statements"},
        {Feature::Out, "out", "out", "Standalone Statements"},
        {Feature::Item, "item", "Item", "Standalone Statements"},
        {Feature::RecurseUp, "recurse_up", "Recurse Up", "Standalone Statements"},
        {Feature::RecurseUpRelations, "recurse_up_relations", "Recurse Up Relations",
         "Standalone Statements"},
        {Feature::RecurseDown, "recurse_down", "Recurse Down", "Standalone Statements"},
        {Feature::RecurseDownRelations, "recurse_down_relations", "Recurse Down Relations",
         "Standalone Statements"},
        {Feature::IsIn, "is_in", "is_in", "Standalone Statements"},
        {Feature::Timeline, "timeline", "timeline", "Standalone Statements"},
        {Feature::Local, "local", "local", "Standalone Statements"},
        {Feature::Convert, "convert", "convert", "Standalone Statements"},
        {Feature::Make, "make", "make", "Standalone Statements"},
        {Feature::QueryStatement, "query_statement", "The Query Statement",
         "Standalone Statements"},
        {Feature::QueryFilter, "query_filter", "The Query Filter", "Standalone Statements"},
        {Feature::ByTag, "by_tag", "By Tag", "Filters"},
        {Feature::BboxFilter, "bbox_filter", "Bounding Box", "Filters"},
        {Feature::RecurseBy, "recurse_by", "Recurse By nwr", "Filters"},
        {Feature::ByWayCount, "by_way_count", "Recurse By Way Count", "Filters"},
        {Feature::ByInputSet, "by_input_set", "By Input Set", "Filters"},
        {Feature::ByElementId, "by_element_id", "By Element Id", "Filters"},
        {Feature::Around, "around", "Relative to Other Elements", "Filters"},
        {Feature::ByPolygon, "by_polygon", "By Polygon", "Filters"},
        {Feature::Newer, "newer", "Newer", "Filters"},
        {Feature::ByDateOfChange, "by_date_of_change", "By Date of Change", "Filters"},
        {Feature::ByUser, "by_user", "By User", "Filters"},
        {Feature::ByArea, "by_area", "By Area", "Filters"},
        {Feature::AreaPivot, "area_pivot", "Area Pivot", "Filters"},
        {Feature::ConditionalFilter, "conditional_filter", "Conditional Query Filter", "Filters"},
    }};
    return kTable;
}

const FeatureInfo& feature_info(Feature f) {
    return feature_taxonomy()[static_cast<std::size_t>(f)];
}

std::size_t FeatureSet::count() const {
    std::size_t n = 0;
    for (bool b : bits_) n += b;
    return n;
}

std::vector<Feature> FeatureSet::to_list() const {
    std::vector<Feature> out;
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i]) out.push_back(static_cast<Feature>(i));
    return out;
}

namespace {

void detect_filter(const Filter& f, FeatureSet& fs) {
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ByTagFilter>) fs.set(Feature::ByTag);
            else if constexpr (std::is_same_v<T, BoundingBoxFilter>) fs.set(Feature::BboxFilter);
            else if constexpr (std::is_same_v<T, ByAreaFilter>) fs.set(Feature::ByArea);
            else if constexpr (std::is_same_v<T, AreaPivotFilter>) fs.set(Feature::AreaPivot);
            else if constexpr (std::is_same_v<T, ByInputSetFilter>) fs.set(Feature::ByInputSet);
            else if constexpr (std::is_same_v<T, ByElementIdFilter>) fs.set(Feature::ByElementId);
            else if constexpr (std::is_same_v<T, AroundFilter>) fs.set(Feature::Around);
            else if constexpr (std::is_same_v<T, ByPolygonFilter>) fs.set(Feature::ByPolygon);
            else if constexpr (std::is_same_v<T, NewerFilter>) fs.set(Feature::Newer);
            else if constexpr (std::is_same_v<T, ByDateOfChangeFilter>)
                fs.set(Feature::ByDateOfChange);
            else if constexpr (std::is_same_v<T, ByUserFilter>) fs.set(Feature::ByUser);
            else if constexpr (std::is_same_v<T, RecurseByFilter>) fs.set(Feature::RecurseBy);
            else if constexpr (std::is_same_v<T, ByWayCountFilter>) fs.set(Feature::ByWayCount);
            else if constexpr (std::is_same_v<T, ConditionalQueryFilter>)
                fs.set(Feature::ConditionalFilter);
        },
        f);
}

}  // namespace

FeatureSet detect_features(const QueryAst& ast) {
    FeatureSet fs;
    for (const auto& s : ast.settings) {
        if (s.name == "timeout") fs.set(Feature::Timeout);
        else if (s.name == "maxsize") fs.set(Feature::ElementLimit);
        else if (s.name == "out") fs.set(Feature::OutputFormat);
        else if (s.name == "bbox") fs.set(Feature::BboxSetting);
        else if (s.name == "date") fs.set(Feature::DateSetting);
        else if (s.name == "diff" || s.name == "adiff") fs.set(Feature::DiffSetting);
    }
    walk_statements(ast.statements, [&](const Statement& st) {
        std::visit(
            [&](const auto& node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, QueryStatement>) {
                    fs.set(node.spelling.empty() ? Feature::QueryFilter : Feature::QueryStatement);
                    for (const auto& f : node.filters) detect_filter(f, fs);
                } else if constexpr (std::is_same_v<T, UnionStatement>) {
                    fs.set(Feature::Union);
                } else if constexpr (std::is_same_v<T, DifferenceStatement>) {
                    fs.set(Feature::Difference);
                } else if constexpr (std::is_same_v<T, IfStatement>) {
                    fs.set(Feature::If);
                } else if constexpr (std::is_same_v<T, ForStatement>) {
                    fs.set(Feature::For);
                } else if constexpr (std::is_same_v<T, ForEachStatement>) {
                    fs.set(Feature::ForEach);
                } else if constexpr (std::is_same_v<T, CompleteStatement>) {
                    fs.set(Feature::Complete);
                } else if constexpr (std::is_same_v<T, RetroStatement>) {
                    fs.set(Feature::Retro);
                } else if constexpr (std::is_same_v<T, CompareStatement>) {
                    fs.set(Feature::Compare);
                } else if constexpr (std::is_same_v<T, OutStatement>) {
                    fs.set(Feature::Out);
                    fs.set(Feature::ByInputSet);
                } else if constexpr (std::is_same_v<T, RecurseStatement>) {
                    switch (node.dir) {
                        case RecurseDir::Down: fs.set(Feature::RecurseDown); break;
                        case RecurseDir::DownRelations:
                            fs.set(Feature::RecurseDownRelations);
                            break;
                        case RecurseDir::Up: fs.set(Feature::RecurseUp); break;
                        case RecurseDir::UpRelations: fs.set(Feature::RecurseUpRelations); break;
                    }
                    fs.set(Feature::ByInputSet);
                } else if constexpr (std::is_same_v<T, IsInStatement>) {
                    fs.set(Feature::IsIn);
                    if (node.coords.empty()) fs.set(Feature::ByInputSet);
                } else if constexpr (std::is_same_v<T, ItemStatement>) {
                    fs.set(Feature::Item);
                    fs.set(Feature::ByInputSet);
                } else if constexpr (std::is_same_v<T, ConvertStatement>) {
                    fs.set(Feature::Convert);
                } else if constexpr (std::is_same_v<T, MakeStatement>) {
                    fs.set(Feature::Make);
                } else if constexpr (std::is_same_v<T, TimelineStatement>) {
                    fs.set(Feature::Timeline);
                } else if constexpr (std::is_same_v<T, LocalStatement>) {
                    fs.set(Feature::Local);
                }
            },
            st.node);
    });
    return fs;
}

std::vector<std::pair<std::string, std::string>> extract_comments(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> out;
    auto tokens = tokenize(text);
    std::string stripped;
    std::vector<std::string> comments;
    for (const auto& t : tokens) {
        if (t.kind != TokenKind::Comment) {
            stripped += t.lexeme;
            continue;
        }
        std::string_view body = t.lexeme;
        if (text::starts_with(body, "//")) {
            body.remove_prefix(2);
        } else if (text::starts_with(body, "/*")) {
            body.remove_prefix(2);
            if (body.size() >= 2) body.remove_suffix(2);
        }
        comments.emplace_back(text::trim(body));
    }
    std::string query(text::trim(stripped));
    for (auto& c : comments) out.emplace_back(std::move(c), query);
    return out;
}

}  // namespace ovql::oql
