#include "core/lexer.hpp"

#include <array>
#include <unordered_set>

namespace ovql::oql {

namespace {

const std::unordered_set<std::string_view> kKeywords = {
    "node", "way", "rel", "relation", "nwr", "nw", "nr", "wr", "area", "derived",
    "out", "is_in", "foreach", "for", "if", "else", "complete", "retro", "compare",
    "timeline", "local", "convert", "make",
};

bool is_ws(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_ident_start(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
}

bool is_ident_char(unsigned char c) { return is_ident_start(c) || is_digit(static_cast<char>(c)); }

}  // namespace

SourcePos position_at(std::string_view text, std::size_t offset) {
    SourcePos pos;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++pos.line;
            pos.column = 1;
        } else {
            ++pos.column;
        }
    }
    return pos;
}

const char* token_kind_name(TokenKind kind) {
    switch (kind) {
        case TokenKind::Keyword: return "keyword";
        case TokenKind::Identifier: return "identifier";
        case TokenKind::Number: return "number";
        case TokenKind::StringLiteral: return "string-literal";
        case TokenKind::RegexLiteral: return "regex-literal";
        case TokenKind::Punctuation: return "punctuation";
        case TokenKind::TurboMacro: return "turbo-macro";
        case TokenKind::Comment: return "comment";
        case TokenKind::Whitespace: return "whitespace";
    }
    return "?";
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();

    auto push = [&](TokenKind kind, std::size_t begin, std::size_t end) {
        tokens.push_back(Token{kind, std::string(text.substr(begin, end - begin)), {begin, end}});
    };
    auto fail = [&](const std::string& msg, std::size_t begin) -> void {
        throw LexError(msg, Span{begin, n}, position_at(text, begin));
    };
    // True when the last significant token is a regex operator (~ or !~), in
    // which case the next string literal is a regex pattern.
    auto after_regex_op = [&]() {
        for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
            if (it->kind == TokenKind::Whitespace || it->kind == TokenKind::Comment) continue;
            return it->kind == TokenKind::Punctuation && (it->lexeme == "~" || it->lexeme == "!~");
        }
        return false;
    };

    while (i < n) {
        std::size_t start = i;
        char c = text[i];

        if (is_ws(c)) {
            while (i < n && is_ws(text[i])) ++i;
            push(TokenKind::Whitespace, start, i);
            continue;
        }

        if (c == '/' && i + 1 < n && text[i + 1] == '/') {
            i += 2;
            while (i < n && text[i] != '\n') ++i;
            push(TokenKind::Comment, start, i);
            continue;
        }
        if (c == '/' && i + 1 < n && text[i + 1] == '*') {
            i += 2;
            while (i + 1 < n && !(text[i] == '*' && text[i + 1] == '/')) ++i;
            if (i + 1 >= n) fail("unterminated block comment", start);
            i += 2;
            push(TokenKind::Comment, start, i);
            continue;
        }

        if (c == '{' && i + 1 < n && text[i + 1] == '{') {
            i += 2;
            while (i + 1 < n && !(text[i] == '}' && text[i + 1] == '}')) ++i;
            if (i + 1 >= n) fail("unterminated turbo macro", start);
            i += 2;
            push(TokenKind::TurboMacro, start, i);
            continue;
        }

        if (c == '"' || c == '\'') {
            char quote = c;
            ++i;
            while (i < n && text[i] != quote) {
                if (text[i] == '\\' && i + 1 < n) ++i;
                ++i;
            }
            if (i >= n) {
                fail(after_regex_op() ? "unterminated regex literal" : "unterminated string literal",
                     start);
            }
            ++i;
            push(after_regex_op() ? TokenKind::RegexLiteral : TokenKind::StringLiteral, start, i);
            continue;
        }

        if (is_digit(c)) {
            while (i < n && is_digit(text[i])) ++i;
            if (i + 1 < n && text[i] == '.' && is_digit(text[i + 1])) {
                ++i;
                while (i < n && is_digit(text[i])) ++i;
            }
            if (i < n && (text[i] == 'e' || text[i] == 'E')) {
                std::size_t save = i;
                ++i;
                if (i < n && (text[i] == '+' || text[i] == '-')) ++i;
                if (i < n && is_digit(text[i])) {
                    while (i < n && is_digit(text[i])) ++i;
                } else {
                    i = save;
                }
            }
            push(TokenKind::Number, start, i);
            continue;
        }

        if (is_ident_start(static_cast<unsigned char>(c))) {
            while (i < n && is_ident_char(static_cast<unsigned char>(text[i]))) ++i;
            std::string_view word = text.substr(start, i - start);
            push(kKeywords.count(word) ? TokenKind::Keyword : TokenKind::Identifier, start, i);
            continue;
        }

        // punctuation, longest match first
        static const std::array<std::string_view, 10> kMulti = {
            "->", "!~", "!=", "==", "<=", ">=", "<<", ">>", "&&", "||"};
        std::size_t len = 1;
        for (auto op : kMulti) {
            if (text.substr(i, op.size()) == op) {
                len = op.size();
                break;
            }
        }
        i += len;
        push(TokenKind::Punctuation, start, i);
    }
    return tokens;
}

}  // namespace ovql::oql
