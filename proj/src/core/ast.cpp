#include "core/ast.hpp"

#include "core/text.hpp"

#include <sstream>

namespace ovql::oql {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_ident_char(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || is_digit(static_cast<char>(c)) ||
           c >= 0x80;
}

// Length of the template placeholder starting at raw[i], 0 if none. Keeps
// re-normalization of already normalized text stable.
std::size_t placeholder_at(std::string_view raw, std::size_t i) {
    for (std::string_view ph : {kKeyPlaceholder, kValuePlaceholder, kSetPlaceholder,
                                kNumberPlaceholder, kArgPlaceholder}) {
        if (raw.substr(i, ph.size()) == ph) return ph.size();
    }
    return 0;
}

// Placeholder rewriting for raw text chunks (evaluator expressions, out
// parameters, opaque statements, setting values): digit runs -> <N>, quoted
// strings -> <V>, ".name" set references -> ".<S>", macro arguments -> <A>,
// whitespace runs -> single space. Existing placeholders pass through
// untouched, so the rewrite is idempotent.
std::string template_chunk(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    std::size_t i = 0;
    const std::size_t n = raw.size();
    auto is_ws = [](char c) {
        return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
    };
    while (i < n) {
        char c = raw[i];
        if (std::size_t ph = placeholder_at(raw, i); ph > 0) {
            out += raw.substr(i, ph);
            i += ph;
            continue;
        }
        if (is_ws(c)) {
            while (i < n && is_ws(raw[i])) ++i;
            out.push_back(' ');
            continue;
        }
        if (c == '{' && i + 1 < n && raw[i + 1] == '{') {
            std::size_t end = raw.find("}}", i + 2);
            if (end != std::string_view::npos) {
                TurboMacro m = parse_macro_token(raw.substr(i, end + 2 - i));
                out += "{{";
                out += m.name;
                if (!m.argument.empty()) {
                    out += ':';
                    out += kArgPlaceholder;
                }
                out += "}}";
                i = end + 2;
                continue;
            }
        }
        if (c == '"' || c == '\'') {
            char quote = c;
            ++i;
            while (i < n && raw[i] != quote) {
                if (raw[i] == '\\' && i + 1 < n) ++i;
                ++i;
            }
            if (i < n) ++i;
            out += kValuePlaceholder;
            continue;
        }
        if (is_digit(c)) {
            while (i < n && is_digit(raw[i])) ++i;
            if (i + 1 < n && raw[i] == '.' && is_digit(raw[i + 1])) {
                i += 2;
                while (i < n && is_digit(raw[i])) ++i;
            }
            out += kNumberPlaceholder;
            continue;
        }
        if (c == '.' && i + 1 < n && is_ident_char(static_cast<unsigned char>(raw[i + 1])) &&
            !is_digit(raw[i + 1]) && placeholder_at(raw, i + 1) == 0) {
            ++i;
            while (i < n && is_ident_char(static_cast<unsigned char>(raw[i])) &&
                   placeholder_at(raw, i) == 0)
                ++i;
            out.push_back('.');
            out += kSetPlaceholder;
            continue;
        }
        if (is_ident_char(static_cast<unsigned char>(c))) {
            std::size_t start = i;
            while (i < n && is_ident_char(static_cast<unsigned char>(raw[i])) &&
                   placeholder_at(raw, i) == 0)
                ++i;
            out += std::string_view(raw.substr(start, i - start));
            continue;
        }
        out.push_back(c);
        ++i;
    }
    std::string_view trimmed = text::trim(out);
    return std::string(trimmed);
}

class Serializer {
public:
    explicit Serializer(const SerializeOptions& opts) : tpl_(opts.template_mode) {}

    std::string run(const QueryAst& ast) {
        if (!ast.settings.empty()) {
            for (const auto& s : ast.settings) setting(s);
            out_ += ';';
        }
        for (const auto& st : ast.statements) statement(st);
        return out_;
    }

    std::string run(const Statement& st) {
        statement(st);
        return out_;
    }

private:
    void setting(const Setting& s) {
        out_ += '[';
        out_ += s.name;
        if (!s.value.empty()) {
            out_ += ':';
            out_ += tpl_ ? template_chunk(s.value) : s.value;
        }
        out_ += ']';
    }

    void chunk(std::string_view raw) { out_ += tpl_ ? template_chunk(raw) : std::string(raw); }

    void set_name(std::string_view name) {
        out_ += '.';
        if (tpl_)
            out_ += kSetPlaceholder;
        else
            out_ += name;
    }

    void output_set(const std::string& name) {
        if (name.empty()) return;
        out_ += "->";
        set_name(name);
    }

    void key_text(const TagFilter& t) {
        if (tpl_) {
            out_ += kKeyPlaceholder;
        } else if (t.key_quoted) {
            out_ += escape_string(t.key);
        } else {
            out_ += t.key;
        }
    }

    void value_text(const TagFilter& t) {
        if (tpl_) {
            out_ += kValuePlaceholder;
        } else if (t.value_quoted) {
            out_ += escape_string(t.value);
        } else {
            out_ += t.value;
        }
    }

    void macro(const TurboMacro& m) {
        if (!tpl_) {
            out_ += m.raw;
            return;
        }
        out_ += "{{";
        out_ += m.name;
        if (!m.argument.empty()) {
            out_ += ':';
            out_ += kArgPlaceholder;
        }
        out_ += "}}";
    }

    void filter(const Filter& f) {
        std::visit([this](const auto& v) { this->filter_node(v); }, f);
    }

    void filter_node(const ByTagFilter& f) {
        const TagFilter& t = f.tag;
        out_ += '[';
        switch (t.match) {
            case TagMatch::Exists:
                key_text(t);
                break;
            case TagMatch::NotExists:
                out_ += '!';
                key_text(t);
                break;
            case TagMatch::Equals:
                key_text(t);
                out_ += '=';
                value_text(t);
                break;
            case TagMatch::NotEquals:
                key_text(t);
                out_ += "!=";
                value_text(t);
                break;
            case TagMatch::Regex:
                key_text(t);
                out_ += '~';
                value_text(t);
                break;
            case TagMatch::NotRegex:
                key_text(t);
                out_ += "!~";
                value_text(t);
                break;
            case TagMatch::KeyRegex:
                out_ += '~';
                key_text(t);
                out_ += '~';
                value_text(t);
                break;
        }
        if (t.case_insensitive) out_ += ",i";
        out_ += ']';
    }

    void filter_node(const BoundingBoxFilter& f) {
        out_ += '(';
        if (f.macro)
            macro(*f.macro);
        else
            chunk(f.coords);
        out_ += ')';
    }

    void filter_node(const ByAreaFilter& f) {
        out_ += "(area";
        if (!f.set_name.empty()) set_name(f.set_name);
        if (!f.area_id.empty()) {
            out_ += ':';
            chunk(f.area_id);
        }
        out_ += ')';
    }

    void filter_node(const AreaPivotFilter& f) {
        out_ += "(pivot";
        if (!f.set_name.empty()) set_name(f.set_name);
        out_ += ')';
    }

    void filter_node(const ByInputSetFilter& f) { set_name(f.set_name); }

    void filter_node(const ByElementIdFilter& f) {
        out_ += '(';
        if (f.id_prefix) out_ += "id:";
        for (std::size_t i = 0; i < f.ids.size(); ++i) {
            if (i) out_ += ',';
            chunk(f.ids[i]);
        }
        out_ += ')';
    }

    void filter_node(const AroundFilter& f) {
        out_ += "(around";
        if (!f.set_name.empty()) set_name(f.set_name);
        out_ += ':';
        chunk(f.radius);
        chunk(f.tail);
        out_ += ')';
    }

    void filter_node(const ByPolygonFilter& f) {
        out_ += "(poly:";
        chunk(f.poly);
        out_ += ')';
    }

    void filter_node(const NewerFilter& f) {
        out_ += "(newer:";
        chunk(f.date);
        out_ += ')';
    }

    void filter_node(const ByDateOfChangeFilter& f) {
        out_ += "(changed:";
        for (std::size_t i = 0; i < f.dates.size(); ++i) {
            if (i) out_ += ',';
            chunk(f.dates[i]);
        }
        out_ += ')';
    }

    void filter_node(const ByUserFilter& f) {
        out_ += '(';
        out_ += f.by_uid ? "uid:" : "user:";
        for (std::size_t i = 0; i < f.names.size(); ++i) {
            if (i) out_ += ',';
            chunk(f.names[i]);
        }
        out_ += ')';
    }

    void filter_node(const RecurseByFilter& f) {
        out_ += '(';
        out_ += f.mode;
        if (!f.set_name.empty()) set_name(f.set_name);
        if (f.has_role) {
            out_ += ':';
            chunk(f.role);
        }
        out_ += ')';
    }

    void filter_node(const ByWayCountFilter& f) {
        out_ += '(';
        chunk(f.text);
        out_ += ')';
    }

    void filter_node(const ConditionalQueryFilter& f) {
        out_ += "(if:";
        chunk(f.expr);
        out_ += ')';
    }

    void body(const std::vector<Statement>& stmts) {
        out_ += '{';
        for (const auto& st : stmts) statement(st);
        out_ += '}';
    }

    void statement(const Statement& st) {
        std::visit([this](const auto& v) { this->statement_node(v); }, st.node);
    }

    void statement_node(const QueryStatement& q) {
        out_ += q.spelling;
        for (const auto& f : q.filters) filter(f);
        output_set(q.output_set);
        out_ += ';';
    }

    void statement_node(const UnionStatement& u) {
        out_ += '(';
        for (const auto& m : u.members) statement(m);
        out_ += ')';
        output_set(u.output_set);
        out_ += ';';
    }

    void statement_node(const DifferenceStatement& d) {
        out_ += '(';
        for (std::size_t i = 0; i < d.members.size(); ++i) {
            if (i) out_ += "- ";
            statement(d.members[i]);
        }
        out_ += ')';
        output_set(d.output_set);
        out_ += ';';
    }

    void statement_node(const IfStatement& s) {
        out_ += "if(";
        chunk(s.condition);
        out_ += ')';
        body(s.then_body);
        if (s.has_else) {
            out_ += "else";
            body(s.else_body);
        }
    }

    void statement_node(const ForStatement& s) {
        out_ += "for";
        if (!s.input_set.empty()) set_name(s.input_set);
        output_set(s.output_set);
        out_ += '(';
        chunk(s.expr);
        out_ += ')';
        body(s.body);
    }

    void statement_node(const ForEachStatement& s) {
        out_ += "foreach";
        if (!s.input_set.empty()) set_name(s.input_set);
        output_set(s.output_set);
        body(s.body);
    }

    void statement_node(const CompleteStatement& s) {
        out_ += "complete";
        if (!s.limit.empty()) {
            out_ += '(';
            chunk(s.limit);
            out_ += ')';
        }
        if (!s.input_set.empty()) set_name(s.input_set);
        output_set(s.output_set);
        body(s.body);
    }

    void statement_node(const RetroStatement& s) {
        out_ += "retro(";
        chunk(s.expr);
        out_ += ')';
        body(s.body);
    }

    void statement_node(const CompareStatement& s) {
        out_ += "compare";
        if (!s.input_set.empty()) set_name(s.input_set);
        output_set(s.output_set);
        if (!s.delta_expr.empty()) {
            out_ += "(delta:";
            chunk(s.delta_expr);
            out_ += ')';
        }
        if (s.has_body)
            body(s.body);
        else
            out_ += ';';
    }

    void statement_node(const OutStatement& s) {
        if (!s.input_set.empty()) {
            set_name(s.input_set);
            out_ += ' ';
        }
        out_ += "out";
        for (const auto& p : s.params) {
            out_ += ' ';
            chunk(p);
        }
        out_ += ';';
    }

    void statement_node(const RecurseStatement& s) {
        if (!s.input_set.empty()) {
            set_name(s.input_set);
            out_ += ' ';
        }
        switch (s.dir) {
            case RecurseDir::Down: out_ += '>'; break;
            case RecurseDir::DownRelations: out_ += ">>"; break;
            case RecurseDir::Up: out_ += '<'; break;
            case RecurseDir::UpRelations: out_ += "<<"; break;
        }
        if (!s.output_set.empty()) {
            out_ += ' ';
            output_set(s.output_set);
        }
        out_ += ';';
    }

    void statement_node(const IsInStatement& s) {
        if (!s.input_set.empty()) {
            set_name(s.input_set);
            out_ += ' ';
        }
        out_ += "is_in";
        if (!s.coords.empty()) {
            out_ += '(';
            chunk(s.coords);
            out_ += ')';
        }
        output_set(s.output_set);
        out_ += ';';
    }

    void statement_node(const ItemStatement& s) {
        set_name(s.set_name);
        output_set(s.output_set);
        out_ += ';';
    }

    void statement_node(const ConvertStatement& s) {
        out_ += "convert ";
        out_ += tpl_ ? template_chunk(s.type_name) : s.type_name;
        for (std::size_t i = 0; i < s.clauses.size(); ++i) {
            out_ += i ? "," : " ";
            chunk(s.clauses[i]);
        }
        out_ += ';';
    }

    void statement_node(const MakeStatement& s) {
        out_ += "make ";
        out_ += tpl_ ? template_chunk(s.type_name) : s.type_name;
        for (std::size_t i = 0; i < s.clauses.size(); ++i) {
            out_ += i ? "," : " ";
            chunk(s.clauses[i]);
        }
        out_ += ';';
    }

    void statement_node(const TimelineStatement& s) {
        out_ += "timeline(";
        for (std::size_t i = 0; i < s.args.size(); ++i) {
            if (i) out_ += ',';
            chunk(s.args[i]);
        }
        out_ += ')';
        output_set(s.output_set);
        out_ += ';';
    }

    void statement_node(const LocalStatement& s) {
        out_ += "local";
        if (!s.args.empty()) {
            out_ += ' ';
            chunk(s.args);
        }
        out_ += ';';
    }

    void statement_node(const MacroStatement& s) {
        macro(s.macro);
        output_set(s.output_set);
        out_ += ';';
    }

    void statement_node(const OpaqueStatement& s) {
        chunk(s.text);
        out_ += ';';
    }

    std::string out_;
    bool tpl_;
};

}  // namespace

const char* element_kind_name(ElementKind k) {
    switch (k) {
        case ElementKind::Node: return "node";
        case ElementKind::Way: return "way";
        case ElementKind::Relation: return "relation";
        case ElementKind::Nwr: return "nwr";
        case ElementKind::Area: return "area";
        case ElementKind::Derived: return "derived";
    }
    return "?";
}

MacroKind classify_macro(std::string_view name) {
    if (name == "bbox") return MacroKind::Bbox;
    if (name == "geocodeArea") return MacroKind::GeocodeArea;
    if (name == "geocodeCoords") return MacroKind::GeocodeCoords;
    if (name == "geocodeId") return MacroKind::GeocodeId;
    return MacroKind::Other;
}

TurboMacro parse_macro_token(std::string_view raw) {
    TurboMacro m;
    m.raw = std::string(raw);
    std::string_view inner = raw;
    if (text::starts_with(inner, "{{")) inner.remove_prefix(2);
    if (inner.size() >= 2 && inner.substr(inner.size() - 2) == "}}")
        inner.remove_suffix(2);
    inner = text::trim(inner);
    auto colon = inner.find(':');
    if (colon == std::string_view::npos) {
        m.name = std::string(inner);
    } else {
        m.name = std::string(text::trim(inner.substr(0, colon)));
        std::string_view arg = text::trim(inner.substr(colon + 1));
        if (arg.size() >= 2 && (arg.front() == '"' || arg.front() == '\'') &&
            arg.back() == arg.front()) {
            arg = arg.substr(1, arg.size() - 2);
        }
        m.argument = std::string(arg);
    }
    m.kind = classify_macro(m.name);
    return m;
}

std::string escape_string(std::string_view content, char quote) {
    std::string out;
    out.reserve(content.size() + 2);
    out.push_back(quote);
    for (char c : content) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (c == quote) {
                    out.push_back('\\');
                    out.push_back(c);
                } else {
                    out.push_back(c);
                }
        }
    }
    out.push_back(quote);
    return out;
}

std::string serialize(const QueryAst& ast, const SerializeOptions& opts) {
    return Serializer(opts).run(ast);
}

std::string serialize(const Statement& st, const SerializeOptions& opts) {
    return Serializer(opts).run(st);
}

}  // namespace ovql::oql
