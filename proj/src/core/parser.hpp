#pragma once

#include "core/ast.hpp"
#include "core/lexer.hpp"

#include <stdexcept>
#include <string>
#include <string_view>

namespace ovql::oql {

class ParseError : public std::runtime_error {
public:
    ParseError(std::string message, std::size_t offset, SourcePos pos)
        : std::runtime_error(std::move(message)), offset_(offset), pos_(pos) {}

    std::size_t offset() const { return offset_; }
    SourcePos pos() const { return pos_; }

    // "line L, column C: message"
    std::string describe() const;

private:
    std::size_t offset_;
    SourcePos pos_;
};

// Parses OverpassQL text, Overpass Turbo macros included. Unknown but
// balanced constructs come back as OpaqueStatement nodes; genuinely
// malformed input (unbalanced brackets, unterminated literals) throws
// ParseError / LexError with a source location.
QueryAst parse(std::string_view text);

}  // namespace ovql::oql
