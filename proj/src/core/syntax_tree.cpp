#include "core/syntax_tree.hpp"

namespace ovql::oql {

namespace {

std::string flatten_numbers(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size();) {
        if (raw[i] >= '0' && raw[i] <= '9') {
            while (i < raw.size() && ((raw[i] >= '0' && raw[i] <= '9') || raw[i] == '.')) ++i;
            out.push_back('N');
        } else {
            out.push_back(raw[i]);
            ++i;
        }
    }
    return out;
}

struct TreeBuilder {
    SyntaxTree filter(const Filter& f) {
        return std::visit([this](const auto& v) { return filter_node(v); }, f);
    }

    SyntaxTree filter_node(const ByTagFilter& f) {
        const char* op = "";
        switch (f.tag.match) {
            case TagMatch::Exists: op = "tag:exists"; break;
            case TagMatch::NotExists: op = "tag:not_exists"; break;
            case TagMatch::Equals: op = "tag:eq"; break;
            case TagMatch::NotEquals: op = "tag:neq"; break;
            case TagMatch::Regex: op = "tag:regex"; break;
            case TagMatch::NotRegex: op = "tag:not_regex"; break;
            case TagMatch::KeyRegex: op = "tag:key_regex"; break;
        }
        std::string label = op;
        if (f.tag.case_insensitive) label += ":i";
        return {label, {}};
    }
    SyntaxTree filter_node(const BoundingBoxFilter&) { return {"filter:bbox", {}}; }
    SyntaxTree filter_node(const ByAreaFilter&) { return {"filter:area", {}}; }
    SyntaxTree filter_node(const AreaPivotFilter&) { return {"filter:pivot", {}}; }
    SyntaxTree filter_node(const ByInputSetFilter&) { return {"filter:input_set", {}}; }
    SyntaxTree filter_node(const ByElementIdFilter&) { return {"filter:id", {}}; }
    SyntaxTree filter_node(const AroundFilter&) { return {"filter:around", {}}; }
    SyntaxTree filter_node(const ByPolygonFilter&) { return {"filter:polygon", {}}; }
    SyntaxTree filter_node(const NewerFilter&) { return {"filter:newer", {}}; }
    SyntaxTree filter_node(const ByDateOfChangeFilter&) { return {"filter:changed", {}}; }
    SyntaxTree filter_node(const ByUserFilter&) { return {"filter:user", {}}; }
    SyntaxTree filter_node(const RecurseByFilter& f) { return {"filter:recurse:" + f.mode, {}}; }
    SyntaxTree filter_node(const ByWayCountFilter&) { return {"filter:way_count", {}}; }
    SyntaxTree filter_node(const ConditionalQueryFilter&) { return {"filter:if", {}}; }

    std::vector<SyntaxTree> body(const std::vector<Statement>& stmts) {
        std::vector<SyntaxTree> out;
        out.reserve(stmts.size());
        for (const auto& st : stmts) out.push_back(statement(st));
        return out;
    }

    SyntaxTree statement(const Statement& st) {
        return std::visit([this](const auto& v) { return statement_node(v); }, st.node);
    }

    SyntaxTree statement_node(const QueryStatement& q) {
        SyntaxTree t;
        t.label = q.spelling.empty() ? std::string("query:filter")
                                     : std::string("query:") + element_kind_name(q.kind);
        for (const auto& f : q.filters) t.children.push_back(filter(f));
        return t;
    }
    SyntaxTree statement_node(const UnionStatement& u) { return {"union", body(u.members)}; }
    SyntaxTree statement_node(const DifferenceStatement& d) {
        return {"difference", body(d.members)};
    }
    SyntaxTree statement_node(const IfStatement& s) {
        SyntaxTree t{"if", body(s.then_body)};
        if (s.has_else) t.children.push_back({"else", body(s.else_body)});
        return t;
    }
    SyntaxTree statement_node(const ForStatement& s) { return {"for", body(s.body)}; }
    SyntaxTree statement_node(const ForEachStatement& s) { return {"foreach", body(s.body)}; }
    SyntaxTree statement_node(const CompleteStatement& s) { return {"complete", body(s.body)}; }
    SyntaxTree statement_node(const RetroStatement& s) { return {"retro", body(s.body)}; }
    SyntaxTree statement_node(const CompareStatement& s) { return {"compare", body(s.body)}; }
    SyntaxTree statement_node(const OutStatement& s) {
        std::string label = "out";
        for (std::size_t i = 0; i < s.params.size(); ++i) {
            label += i ? " " : ":";
            label += flatten_numbers(s.params[i]);
        }
        return {label, {}};
    }
    SyntaxTree statement_node(const RecurseStatement& s) {
        switch (s.dir) {
            case RecurseDir::Down: return {"recurse_down", {}};
            case RecurseDir::DownRelations: return {"recurse_down_rels", {}};
            case RecurseDir::Up: return {"recurse_up", {}};
            case RecurseDir::UpRelations: return {"recurse_up_rels", {}};
        }
        return {"recurse", {}};
    }
    SyntaxTree statement_node(const IsInStatement& s) {
        return {s.coords.empty() ? "is_in" : "is_in:coords", {}};
    }
    SyntaxTree statement_node(const ItemStatement&) { return {"item", {}}; }
    SyntaxTree statement_node(const ConvertStatement& s) {
        SyntaxTree t{"convert", {}};
        for (std::size_t i = 0; i < s.clauses.size(); ++i) t.children.push_back({"set_tag", {}});
        return t;
    }
    SyntaxTree statement_node(const MakeStatement& s) {
        SyntaxTree t{"make", {}};
        for (std::size_t i = 0; i < s.clauses.size(); ++i) t.children.push_back({"set_tag", {}});
        return t;
    }
    SyntaxTree statement_node(const TimelineStatement&) { return {"timeline", {}}; }
    SyntaxTree statement_node(const LocalStatement&) { return {"local", {}}; }
    SyntaxTree statement_node(const MacroStatement& s) {
        if (s.macro.kind == MacroKind::Other) return {"macro", {}};
        return {"macro:" + s.macro.name, {}};
    }
    SyntaxTree statement_node(const OpaqueStatement&) { return {"opaque", {}}; }
};

}  // namespace

SyntaxTree to_syntax_tree(const QueryAst& ast) {
    TreeBuilder b;
    SyntaxTree root{"script", {}};
    if (!ast.settings.empty()) {
        SyntaxTree settings{"settings", {}};
        for (const auto& s : ast.settings) settings.children.push_back({"setting:" + s.name, {}});
        root.children.push_back(std::move(settings));
    }
    for (const auto& st : ast.statements) root.children.push_back(b.statement(st));
    return root;
}

std::size_t node_count(const SyntaxTree& tree) {
    std::size_t n = 1;
    for (const auto& c : tree.children) n += node_count(c);
    return n;
}

std::size_t count_syntactic_units(const QueryAst& ast) {
    return node_count(to_syntax_tree(ast));
}

std::string serialize_subtree(const SyntaxTree& tree) {
    std::string out = tree.label;
    out += '(';
    for (std::size_t i = 0; i < tree.children.size(); ++i) {
        if (i) out += ',';
        out += serialize_subtree(tree.children[i]);
    }
    out += ')';
    return out;
}

namespace {

void collect_subtrees(const SyntaxTree& tree, std::vector<std::string>& out) {
    out.push_back(serialize_subtree(tree));
    for (const auto& c : tree.children) collect_subtrees(c, out);
}

void render(const SyntaxTree& tree, int depth, std::string& out) {
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    out += tree.label;
    out += '\n';
    for (const auto& c : tree.children) render(c, depth + 1, out);
}

}  // namespace

std::vector<std::string> all_subtrees(const SyntaxTree& tree) {
    std::vector<std::string> out;
    collect_subtrees(tree, out);
    return out;
}

std::string render_tree(const SyntaxTree& tree) {
    std::string out;
    render(tree, 0, out);
    return out;
}

}  // namespace ovql::oql
