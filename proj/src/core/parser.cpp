#include "core/parser.hpp"

#include "core/text.hpp"

#include <optional>
#include <unordered_map>
#include <unordered_set>

namespace ovql::oql {

namespace {

const std::unordered_map<std::string_view, ElementKind> kElementKinds = {
    {"node", ElementKind::Node},   {"way", ElementKind::Way},
    {"rel", ElementKind::Relation}, {"relation", ElementKind::Relation},
    {"nwr", ElementKind::Nwr},      {"nw", ElementKind::Nwr},
    {"nr", ElementKind::Nwr},       {"wr", ElementKind::Nwr},
    {"area", ElementKind::Area},    {"derived", ElementKind::Derived},
};

const std::unordered_set<std::string_view> kRecurseByModes = {"n", "w", "r", "bn", "bw", "br"};

std::string unescape(std::string_view content) {
    std::string out;
    out.reserve(content.size());
    for (std::size_t i = 0; i < content.size(); ++i) {
        char c = content[i];
        if (c != '\\' || i + 1 >= content.size()) {
            out.push_back(c);
            continue;
        }
        char next = content[++i];
        switch (next) {
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            case 'r': out.push_back('\r'); break;
            case '"': out.push_back('"'); break;
            case '\'': out.push_back('\''); break;
            case '\\': out.push_back('\\'); break;
            default:
                out.push_back('\\');
                out.push_back(next);
        }
    }
    return out;
}

class Parser {
public:
    Parser(std::string_view text, const std::vector<Token>& tokens)
        : text_(text), all_(tokens) {
        sig_.reserve(tokens.size());
        for (const auto& t : tokens) {
            if (t.kind != TokenKind::Whitespace && t.kind != TokenKind::Comment)
                sig_.push_back(&t);
        }
    }

    QueryAst parse() {
        QueryAst ast;
        // settings may come in several [..][..]; groups, all before statements
        while (!at_end() && is_punct("[")) {
            std::size_t start = pos_;
            try {
                auto batch = parse_settings();
                ast.settings.insert(ast.settings.end(), batch.begin(), batch.end());
            } catch (const ParseError&) {
                pos_ = start;
                break;
            }
        }
        ast.statements = parse_statements();
        if (!at_end()) fail("unexpected '" + cur().lexeme + "'");
        return ast;
    }

private:
    // ---- token plumbing ----

    bool at_end() const { return pos_ >= sig_.size(); }
    const Token& cur() const { return *sig_[pos_]; }

    bool is_punct(std::string_view p) const {
        return !at_end() && cur().kind == TokenKind::Punctuation && cur().lexeme == p;
    }
    bool is_word(std::string_view w) const {
        return !at_end() &&
               (cur().kind == TokenKind::Identifier || cur().kind == TokenKind::Keyword) &&
               cur().lexeme == w;
    }
    bool is_kind(TokenKind k) const { return !at_end() && cur().kind == k; }

    const Token& advance() { return *sig_[pos_++]; }

    bool accept_punct(std::string_view p) {
        if (!is_punct(p)) return false;
        ++pos_;
        return true;
    }

    void expect_punct(std::string_view p) {
        if (!accept_punct(p)) fail(std::string("expected '") + std::string(p) + "'");
    }

    [[noreturn]] void fail(const std::string& msg) const {
        std::size_t off = at_end() ? text_.size() : cur().span.begin;
        throw ParseError(msg, off, position_at(text_, off));
    }

    // Source slice between two significant tokens with comments excised;
    // interleaved whitespace is kept so captured text stays readable.
    std::string raw_between(std::size_t from_tok, std::size_t to_tok) const {
        if (from_tok >= to_tok) return {};
        std::size_t b = sig_[from_tok]->span.begin;
        std::size_t e = sig_[to_tok - 1]->span.end;
        std::string out;
        out.reserve(e - b);
        for (const Token& t : all_) {
            if (t.span.end <= b) continue;
            if (t.span.begin >= e) break;
            if (t.kind != TokenKind::Comment) out += t.lexeme;
        }
        return out;
    }

    // Raw text up to the matching close of the currently open group.
    // Consumes everything before the closer but not the closer itself.
    std::string raw_until_close(std::string_view closer) {
        std::size_t from = pos_;
        int depth = 0;
        while (!at_end()) {
            const Token& t = cur();
            if (t.kind == TokenKind::Punctuation) {
                if (t.lexeme == "(" || t.lexeme == "[" || t.lexeme == "{") ++depth;
                if (t.lexeme == ")" || t.lexeme == "]" || t.lexeme == "}") {
                    if (depth == 0 && t.lexeme == closer) return raw_between(from, pos_);
                    if (depth == 0) fail("mismatched bracket");
                    --depth;
                }
            }
            ++pos_;
        }
        fail(std::string("missing closing '") + std::string(closer) + "'");
    }

    // ---- settings ----

    std::vector<Setting> parse_settings() {
        std::vector<Setting> settings;
        while (accept_punct("[")) {
            if (at_end() || (cur().kind != TokenKind::Identifier && cur().kind != TokenKind::Keyword))
                fail("expected setting name");
            Setting s;
            s.name = advance().lexeme;
            if (accept_punct(":")) s.value = raw_until_close("]");
            expect_punct("]");
            settings.push_back(std::move(s));
        }
        expect_punct(";");
        return settings;
    }

    // ---- statements ----

    std::vector<Statement> parse_statements() {
        std::vector<Statement> out;
        while (!at_end() && !is_punct(")") && !is_punct("}")) {
            if (accept_punct(";")) continue;  // stray empty statement
            out.push_back(parse_statement());
        }
        return out;
    }

    Statement parse_statement() {
        std::size_t start = pos_;
        // beyond the limit, recovery is left to an enclosing level
        if (depth_ >= kMaxNesting) fail("statement nesting too deep");
        ++depth_;
        try {
            Statement st = parse_statement_inner();
            --depth_;
            return st;
        } catch (const ParseError& original) {
            --depth_;
            pos_ = start;
            auto opaque = try_parse_opaque();
            if (!opaque) throw original;
            return *opaque;
        }
    }

    // Balanced-text fallback: capture everything up to ';' (or the enclosing
    // closer) as an opaque statement. Returns nullopt when the region is not
    // balanced or empty.
    std::optional<Statement> try_parse_opaque() {
        std::size_t from = pos_;
        int depth = 0;
        while (!at_end()) {
            const Token& t = cur();
            if (t.kind == TokenKind::Punctuation) {
                if (t.lexeme == "(" || t.lexeme == "[" || t.lexeme == "{") ++depth;
                if (t.lexeme == ")" || t.lexeme == "]" || t.lexeme == "}") {
                    if (depth == 0) break;  // enclosing group's closer
                    --depth;
                }
                if (t.lexeme == ";" && depth == 0) break;
            }
            ++pos_;
        }
        if (depth != 0) return std::nullopt;
        std::string raw = raw_between(from, pos_);
        accept_punct(";");
        if (text::trim(raw).empty()) return std::nullopt;
        Statement st;
        st.node = OpaqueStatement{std::string(text::trim(raw))};
        return st;
    }

    Statement parse_statement_inner() {
        if (at_end()) fail("expected statement");
        const Token& t = cur();

        if (t.kind == TokenKind::TurboMacro) return parse_macro_statement();

        if (t.kind == TokenKind::Keyword) {
            auto it = kElementKinds.find(t.lexeme);
            if (it != kElementKinds.end()) return parse_query_statement();
            if (t.lexeme == "out") return parse_out("");
            if (t.lexeme == "is_in") return parse_is_in("");
            if (t.lexeme == "if") return parse_if();
            if (t.lexeme == "for") return parse_for("");
            if (t.lexeme == "foreach") return parse_foreach("");
            if (t.lexeme == "complete") return parse_complete("");
            if (t.lexeme == "retro") return parse_retro();
            if (t.lexeme == "compare") return parse_compare("");
            if (t.lexeme == "timeline") return parse_timeline();
            if (t.lexeme == "local") return parse_local();
            if (t.lexeme == "convert") return parse_convert_or_make(false);
            if (t.lexeme == "make") return parse_convert_or_make(true);
            fail("unexpected keyword '" + t.lexeme + "'");
        }

        if (t.kind == TokenKind::Punctuation) {
            if (t.lexeme == "(") return parse_group();
            if (t.lexeme == ">" || t.lexeme == ">>" || t.lexeme == "<" || t.lexeme == "<<")
                return parse_recurse("");
            if (t.lexeme == ".") return parse_set_prefixed();
        }

        fail("unexpected '" + t.lexeme + "'");
    }

    std::string parse_set_name() {
        expect_punct(".");
        if (at_end() || (cur().kind != TokenKind::Identifier && cur().kind != TokenKind::Keyword &&
                         cur().kind != TokenKind::Number))
            fail("expected set name after '.'");
        return advance().lexeme;
    }

    std::string parse_output_set() {
        if (!accept_punct("->")) return {};
        return parse_set_name();
    }

    void expect_terminator() {
        if (accept_punct(";")) return;
        if (at_end() || is_punct(")") || is_punct("}")) return;
        fail("expected ';'");
    }

    Statement parse_macro_statement() {
        MacroStatement m;
        m.macro = parse_macro_token(advance().lexeme);
        m.output_set = parse_output_set();
        expect_terminator();
        return Statement{m};
    }

    Statement parse_query_statement() {
        QueryStatement q;
        q.spelling = cur().lexeme;
        q.kind = kElementKinds.at(cur().lexeme);
        ++pos_;
        parse_filters(q);
        q.output_set = parse_output_set();
        expect_terminator();
        return Statement{q};
    }

    void parse_filters(QueryStatement& q) {
        while (!at_end()) {
            if (is_punct(".")) {
                ByInputSetFilter f{parse_set_name()};
                q.input_sets.push_back(f.set_name);
                q.filters.push_back(f);
            } else if (is_punct("[")) {
                q.filters.push_back(parse_tag_filter());
            } else if (is_punct("(")) {
                q.filters.push_back(parse_paren_filter());
            } else {
                break;
            }
        }
    }

    Filter parse_tag_filter() {
        expect_punct("[");
        TagFilter t;
        if (accept_punct("!")) {
            t.match = TagMatch::NotExists;
            read_tag_text(t.key, t.key_quoted);
            expect_punct("]");
            return ByTagFilter{t};
        }
        if (accept_punct("~")) {
            t.match = TagMatch::KeyRegex;
            read_tag_text(t.key, t.key_quoted);
            expect_punct("~");
            read_tag_text(t.value, t.value_quoted);
            parse_tag_flags(t);
            expect_punct("]");
            return ByTagFilter{t};
        }
        read_tag_text(t.key, t.key_quoted);
        if (accept_punct("]")) {
            t.match = TagMatch::Exists;
            return ByTagFilter{t};
        }
        if (accept_punct("=")) {
            t.match = TagMatch::Equals;
        } else if (accept_punct("!=")) {
            t.match = TagMatch::NotEquals;
        } else if (accept_punct("~")) {
            t.match = TagMatch::Regex;
        } else if (accept_punct("!~")) {
            t.match = TagMatch::NotRegex;
        } else {
            fail("expected tag operator");
        }
        read_tag_text(t.value, t.value_quoted);
        parse_tag_flags(t);
        expect_punct("]");
        return ByTagFilter{t};
    }

    void parse_tag_flags(TagFilter& t) {
        if (!is_punct(",")) return;
        ++pos_;
        if (is_word("i")) {
            t.case_insensitive = true;
            ++pos_;
            return;
        }
        fail("unknown tag filter flag");
    }

    void read_tag_text(std::string& out, bool& quoted) {
        if (at_end()) fail("expected tag key or value");
        const Token& t = cur();
        switch (t.kind) {
            case TokenKind::StringLiteral:
            case TokenKind::RegexLiteral:
                quoted = true;
                out = unescape(std::string_view(t.lexeme).substr(1, t.lexeme.size() - 2));
                break;
            case TokenKind::Identifier:
            case TokenKind::Keyword:
            case TokenKind::Number:
                quoted = false;
                out = t.lexeme;
                break;
            default:
                fail("expected tag key or value");
        }
        ++pos_;
    }

    bool at_signed_number() const {
        if (is_kind(TokenKind::Number)) return true;
        if (is_punct("-") && pos_ + 1 < sig_.size() && sig_[pos_ + 1]->kind == TokenKind::Number)
            return true;
        return false;
    }

    std::string parse_signed_number() {
        std::size_t from = pos_;
        accept_punct("-");
        if (!is_kind(TokenKind::Number)) fail("expected number");
        ++pos_;
        return raw_between(from, pos_);
    }

    Filter parse_paren_filter() {
        expect_punct("(");
        Filter f = parse_paren_filter_body();
        expect_punct(")");
        return f;
    }

    Filter parse_paren_filter_body() {
        if (at_end()) fail("expected filter");

        if (cur().kind == TokenKind::TurboMacro) {
            TurboMacro m = parse_macro_token(advance().lexeme);
            if (m.kind != MacroKind::Bbox) fail("unexpected macro in filter");
            return BoundingBoxFilter{"", m};
        }

        if (at_signed_number()) {
            std::size_t from = pos_;
            std::vector<std::string> nums;
            nums.push_back(parse_signed_number());
            while (accept_punct(",")) nums.push_back(parse_signed_number());
            if (nums.size() == 4) return BoundingBoxFilter{raw_between(from, pos_), std::nullopt};
            if (nums.size() == 1 && nums[0][0] != '-') return ByElementIdFilter{nums, false};
            fail("expected bounding box or element id");
        }

        if (cur().kind != TokenKind::Identifier && cur().kind != TokenKind::Keyword)
            fail("expected filter");
        std::string word = cur().lexeme;

        if (word == "id") {
            ++pos_;
            expect_punct(":");
            ByElementIdFilter f;
            f.id_prefix = true;
            f.ids.push_back(parse_signed_number());
            while (accept_punct(",")) f.ids.push_back(parse_signed_number());
            return f;
        }
        if (word == "around") {
            ++pos_;
            AroundFilter f;
            if (is_punct(".")) f.set_name = parse_set_name();
            expect_punct(":");
            f.radius = parse_signed_number();
            f.tail = raw_until_close(")");
            return f;
        }
        if (word == "poly") {
            ++pos_;
            expect_punct(":");
            return ByPolygonFilter{raw_until_close(")")};
        }
        if (word == "newer") {
            ++pos_;
            expect_punct(":");
            return NewerFilter{raw_until_close(")")};
        }
        if (word == "changed") {
            ++pos_;
            expect_punct(":");
            ByDateOfChangeFilter f;
            f.dates = parse_comma_chunks(")");
            return f;
        }
        if (word == "user" || word == "uid") {
            ++pos_;
            expect_punct(":");
            ByUserFilter f;
            f.by_uid = word == "uid";
            f.names = parse_comma_chunks(")");
            return f;
        }
        if (word == "area") {
            ++pos_;
            ByAreaFilter f;
            if (is_punct(".")) f.set_name = parse_set_name();
            if (accept_punct(":")) f.area_id = raw_until_close(")");
            return f;
        }
        if (word == "pivot") {
            ++pos_;
            AreaPivotFilter f;
            if (is_punct(".")) f.set_name = parse_set_name();
            return f;
        }
        if (word == "if") {
            ++pos_;
            expect_punct(":");
            return ConditionalQueryFilter{raw_until_close(")")};
        }
        if (word == "way_cnt" || word == "way_link") {
            return ByWayCountFilter{raw_until_close(")")};
        }
        if (kRecurseByModes.count(word)) {
            ++pos_;
            RecurseByFilter f;
            f.mode = word;
            if (is_punct(".")) f.set_name = parse_set_name();
            if (accept_punct(":")) {
                f.has_role = true;
                f.role = raw_until_close(")");
            }
            return f;
        }
        fail("unknown filter '" + word + "'");
    }

    std::vector<std::string> parse_comma_chunks(std::string_view closer) {
        // raw chunks split at top-level commas, up to the group closer
        std::vector<std::string> out;
        std::size_t from = pos_;
        int depth = 0;
        while (!at_end()) {
            const Token& t = cur();
            if (t.kind == TokenKind::Punctuation) {
                if (t.lexeme == "(" || t.lexeme == "[" || t.lexeme == "{") ++depth;
                if (t.lexeme == ")" || t.lexeme == "]" || t.lexeme == "}") {
                    if (depth == 0) {
                        if (t.lexeme != closer) fail("mismatched bracket");
                        out.push_back(raw_between(from, pos_));
                        return out;
                    }
                    --depth;
                }
                if (t.lexeme == "," && depth == 0) {
                    out.push_back(raw_between(from, pos_));
                    ++pos_;
                    from = pos_;
                    continue;
                }
                if (t.lexeme == ";" && depth == 0) fail("unexpected ';'");
            }
            ++pos_;
        }
        fail(std::string("missing closing '") + std::string(closer) + "'");
    }

    // '(' already peeked: union, difference, or a filter-only query statement.
    Statement parse_group() {
        std::size_t next = pos_ + 1;
        if (next < sig_.size() && looks_like_filter_head(*sig_[next])) return parse_query_filter_statement("");
        expect_punct("(");
        std::vector<Statement> members;
        std::vector<bool> subtracted;
        while (!at_end() && !is_punct(")")) {
            bool minus = accept_punct("-");
            members.push_back(parse_statement());
            subtracted.push_back(minus);
        }
        expect_punct(")");
        std::string output = parse_output_set();
        expect_terminator();
        bool any_minus = false;
        for (bool b : subtracted) any_minus = any_minus || b;
        Statement st;
        if (any_minus) {
            DifferenceStatement d;
            d.members = std::move(members);
            d.output_set = std::move(output);
            st.node = std::move(d);
        } else {
            UnionStatement u;
            u.members = std::move(members);
            u.output_set = std::move(output);
            st.node = std::move(u);
        }
        return st;
    }

    bool looks_like_filter_head(const Token& t) const {
        if (t.kind == TokenKind::TurboMacro)
            return parse_macro_token(t.lexeme).kind == MacroKind::Bbox;
        if (t.kind == TokenKind::Number) return true;
        if (t.kind == TokenKind::Punctuation && t.lexeme == "-") return true;
        if (t.kind == TokenKind::Identifier || t.kind == TokenKind::Keyword) {
            static const std::unordered_set<std::string_view> kHeads = {
                "around", "poly", "newer", "changed", "user", "uid", "pivot",
                "way_cnt", "way_link", "id"};
            if (kHeads.count(t.lexeme)) return true;
            // "(if:" is a conditional filter; "if (" is a block statement
            if (t.lexeme == "if") {
                // find the following significant token
                for (std::size_t i = pos_ + 2; i < sig_.size(); ++i) {
                    return sig_[i]->kind == TokenKind::Punctuation && sig_[i]->lexeme == ":";
                }
            }
        }
        return false;
    }

    // filter-only query form, e.g. `(around:50);` or `.a(if:...)->.b;`
    Statement parse_query_filter_statement(const std::string& input_set) {
        QueryStatement q;
        q.kind = ElementKind::Nwr;
        q.spelling.clear();
        if (!input_set.empty()) {
            q.input_sets.push_back(input_set);
            q.filters.push_back(ByInputSetFilter{input_set});
        }
        parse_filters(q);
        if (q.filters.empty() || (q.filters.size() == 1 && !input_set.empty()))
            fail("expected filter");
        q.output_set = parse_output_set();
        expect_terminator();
        return Statement{q};
    }

    Statement parse_set_prefixed() {
        std::string set = parse_set_name();
        if (at_end() || is_punct(";") || is_punct(")") || is_punct("}")) {
            ItemStatement s;
            s.set_name = set;
            expect_terminator();
            return Statement{s};
        }
        if (is_punct("->")) {
            ItemStatement s;
            s.set_name = set;
            s.output_set = parse_output_set();
            expect_terminator();
            return Statement{s};
        }
        if (is_word("out")) return parse_out(set);
        if (is_word("is_in")) return parse_is_in(set);
        if (is_punct(">") || is_punct(">>") || is_punct("<") || is_punct("<<"))
            return parse_recurse(set);
        if (is_word("foreach")) return parse_foreach(set);
        if (is_word("for")) return parse_for(set);
        if (is_word("complete")) return parse_complete(set);
        if (is_word("compare")) return parse_compare(set);
        if (is_punct("(") || is_punct("[")) return parse_query_filter_statement(set);
        fail("unexpected '" + cur().lexeme + "' after set name");
    }

    Statement parse_out(const std::string& input_set) {
        ++pos_;  // out
        OutStatement s;
        s.input_set = input_set;
        while (!at_end() && !is_punct(";") && !is_punct(")") && !is_punct("}")) {
            if (is_punct("(")) {
                std::size_t from = pos_;
                ++pos_;
                raw_until_close(")");
                expect_punct(")");
                s.params.push_back(raw_between(from, pos_));
                continue;
            }
            s.params.push_back(advance().lexeme);
        }
        expect_terminator();
        return Statement{s};
    }

    Statement parse_recurse(const std::string& input_set) {
        RecurseStatement s;
        s.input_set = input_set;
        std::string sym = advance().lexeme;
        if (sym == ">") s.dir = RecurseDir::Down;
        else if (sym == ">>") s.dir = RecurseDir::DownRelations;
        else if (sym == "<") s.dir = RecurseDir::Up;
        else s.dir = RecurseDir::UpRelations;
        s.output_set = parse_output_set();
        expect_terminator();
        return Statement{s};
    }

    Statement parse_is_in(const std::string& input_set) {
        ++pos_;  // is_in
        IsInStatement s;
        s.input_set = input_set;
        if (accept_punct("(")) {
            s.coords = raw_until_close(")");
            expect_punct(")");
        }
        s.output_set = parse_output_set();
        expect_terminator();
        return Statement{s};
    }

    std::string parse_paren_expr() {
        expect_punct("(");
        std::string expr = raw_until_close(")");
        expect_punct(")");
        return expr;
    }

    std::vector<Statement> parse_block() {
        expect_punct("{");
        std::vector<Statement> body = parse_statements();
        expect_punct("}");
        accept_punct(";");
        return body;
    }

    Statement parse_if() {
        ++pos_;  // if
        IfStatement s;
        s.condition = parse_paren_expr();
        s.then_body = parse_block();
        if (is_word("else")) {
            ++pos_;
            s.has_else = true;
            s.else_body = parse_block();
        }
        return Statement{s};
    }

    Statement parse_for(const std::string& input_set) {
        ++pos_;  // for
        ForStatement s;
        s.input_set = input_set;
        if (is_punct(".")) s.input_set = parse_set_name();
        s.output_set = parse_output_set();
        s.expr = parse_paren_expr();
        s.body = parse_block();
        return Statement{s};
    }

    Statement parse_foreach(const std::string& input_set) {
        ++pos_;  // foreach
        ForEachStatement s;
        s.input_set = input_set;
        if (is_punct(".")) s.input_set = parse_set_name();
        s.output_set = parse_output_set();
        s.body = parse_block();
        return Statement{s};
    }

    Statement parse_complete(const std::string& input_set) {
        ++pos_;  // complete
        CompleteStatement s;
        s.input_set = input_set;
        if (is_punct("(")) s.limit = parse_paren_expr();
        if (is_punct(".")) s.input_set = parse_set_name();
        s.output_set = parse_output_set();
        s.body = parse_block();
        return Statement{s};
    }

    Statement parse_retro() {
        ++pos_;  // retro
        RetroStatement s;
        s.expr = parse_paren_expr();
        s.body = parse_block();
        return Statement{s};
    }

    Statement parse_compare(const std::string& input_set) {
        ++pos_;  // compare
        CompareStatement s;
        s.input_set = input_set;
        if (is_punct(".")) s.input_set = parse_set_name();
        s.output_set = parse_output_set();
        if (accept_punct("(")) {
            if (is_word("delta")) {
                ++pos_;
                expect_punct(":");
            }
            s.delta_expr = raw_until_close(")");
            expect_punct(")");
        }
        if (is_punct("{")) {
            s.has_body = true;
            s.body = parse_block();
        } else {
            expect_terminator();
        }
        return Statement{s};
    }

    Statement parse_timeline() {
        ++pos_;  // timeline
        TimelineStatement s;
        expect_punct("(");
        s.args = parse_comma_chunks(")");
        expect_punct(")");
        s.output_set = parse_output_set();
        expect_terminator();
        return Statement{s};
    }

    Statement parse_local() {
        ++pos_;  // local
        LocalStatement s;
        std::size_t from = pos_;
        while (!at_end() && !is_punct(";") && !is_punct(")") && !is_punct("}")) ++pos_;
        s.args = raw_between(from, pos_);
        expect_terminator();
        return Statement{s};
    }

    Statement parse_convert_or_make(bool make) {
        ++pos_;  // convert / make
        if (at_end() || (cur().kind != TokenKind::Identifier && cur().kind != TokenKind::Keyword))
            fail("expected derived type name");
        std::string type_name = advance().lexeme;
        std::vector<std::string> clauses;
        if (!is_punct(";") && !at_end() && !is_punct(")") && !is_punct("}")) {
            std::size_t from = pos_;
            int depth = 0;
            while (!at_end()) {
                const Token& t = cur();
                if (t.kind == TokenKind::Punctuation) {
                    if (t.lexeme == "(" || t.lexeme == "[" || t.lexeme == "{") ++depth;
                    if (t.lexeme == ")" || t.lexeme == "]" || t.lexeme == "}") {
                        if (depth == 0) break;
                        --depth;
                    }
                    if (depth == 0 && t.lexeme == ",") {
                        clauses.push_back(raw_between(from, pos_));
                        ++pos_;
                        from = pos_;
                        continue;
                    }
                    if (depth == 0 && t.lexeme == ";") break;
                }
                ++pos_;
            }
            if (depth != 0) fail("unbalanced brackets in clause");
            clauses.push_back(raw_between(from, pos_));
        }
        expect_terminator();
        Statement st;
        if (make)
            st.node = MakeStatement{std::move(type_name), std::move(clauses)};
        else
            st.node = ConvertStatement{std::move(type_name), std::move(clauses)};
        return st;
    }

    static constexpr int kMaxNesting = 400;

    std::string_view text_;
    const std::vector<Token>& all_;
    std::vector<const Token*> sig_;
    std::size_t pos_ = 0;
    int depth_ = 0;
};

}  // namespace

std::string ParseError::describe() const {
    return "line " + std::to_string(pos_.line) + ", column " + std::to_string(pos_.column) + ": " +
           what();
}

QueryAst parse(std::string_view text) {
    auto tokens = tokenize(text);
    Parser p(text, tokens);
    return p.parse();
}

}  // namespace ovql::oql
