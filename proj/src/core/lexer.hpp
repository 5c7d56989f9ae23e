#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ovql::oql {

enum class TokenKind {
    Keyword,
    Identifier,
    Number,
    StringLiteral,
    RegexLiteral,
    Punctuation,
    TurboMacro,
    Comment,
    Whitespace,
};

struct Span {
    std::size_t begin = 0;  // byte offset, inclusive
    std::size_t end = 0;    // byte offset, exclusive
};

struct Token {
    TokenKind kind;
    std::string lexeme;  // exact source bytes
    Span span;
};

struct SourcePos {
    std::size_t line = 1;
    std::size_t column = 1;
};

class LexError : public std::runtime_error {
public:
    LexError(std::string message, Span span, SourcePos pos)
        : std::runtime_error(std::move(message)), span_(span), pos_(pos) {}
    Span span() const { return span_; }
    SourcePos pos() const { return pos_; }

private:
    Span span_;
    SourcePos pos_;
};

// Tokens cover the input exactly: joining lexemes reproduces it byte for byte.
// `{{...}}` macros and comments are single tokens. Throws LexError on
// unterminated strings, block comments, or macros.
std::vector<Token> tokenize(std::string_view text);

SourcePos position_at(std::string_view text, std::size_t offset);

const char* token_kind_name(TokenKind kind);

}  // namespace ovql::oql
