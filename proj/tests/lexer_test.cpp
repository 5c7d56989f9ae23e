#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "core/ast.hpp"
#include "core/lexer.hpp"
#include "fixtures.hpp"

#include <random>
#include <string>

using namespace ovql::oql;

namespace {

std::string join_lexemes(const std::vector<Token>& tokens) {
    std::string out;
    for (const auto& t : tokens) out += t.lexeme;
    return out;
}

std::vector<Token> significant(const std::vector<Token>& tokens) {
    std::vector<Token> out;
    for (const auto& t : tokens)
        if (t.kind != TokenKind::Whitespace && t.kind != TokenKind::Comment) out.push_back(t);
    return out;
}

}  // namespace

TEST_CASE("bbox macro is a single token") {
    auto tokens = tokenize("{{bbox}}");
    REQUIRE(tokens.size() == 1);
    CHECK(tokens[0].kind == TokenKind::TurboMacro);
    CHECK(parse_macro_token(tokens[0].lexeme).kind == MacroKind::Bbox);
}

TEST_CASE("tag filter tokenization") {
    auto tokens = tokenize("node[\"natural\"=\"peak\"]");
    REQUIRE(tokens.size() == 6);
    CHECK(tokens[0].kind == TokenKind::Keyword);
    CHECK(tokens[0].lexeme == "node");
    CHECK(tokens[1].lexeme == "[");
    CHECK(tokens[2].kind == TokenKind::StringLiteral);
    CHECK(tokens[2].lexeme == "\"natural\"");
    CHECK(tokens[3].lexeme == "=");
    CHECK(tokens[4].kind == TokenKind::StringLiteral);
    CHECK(tokens[4].lexeme == "\"peak\"");
    CHECK(tokens[5].lexeme == "]");
}

TEST_CASE("empty input gives empty token list") {
    CHECK(tokenize("").empty());
}

TEST_CASE("comments and macros are single tokens") {
    auto tokens = significant(tokenize("//find peaks\nnode;/*multi\nline*/out;"));
    CHECK(tokens.size() == 4);  // node ; out ;
    auto all = tokenize("//find peaks\nnode;/*multi\nline*/out;");
    int comments = 0;
    for (const auto& t : all)
        if (t.kind == TokenKind::Comment) ++comments;
    CHECK(comments == 2);
}

TEST_CASE("regex literals are classified after a regex operator") {
    auto tokens = significant(tokenize("[\"name\"~\"Apteka\",i]"));
    REQUIRE(tokens.size() == 7);
    CHECK(tokens[1].kind == TokenKind::StringLiteral);
    CHECK(tokens[3].kind == TokenKind::RegexLiteral);

    auto neg = significant(tokenize("[\"name\"!~\"^A\"]"));
    CHECK(neg[3].kind == TokenKind::RegexLiteral);
}

TEST_CASE("lossless lexing reproduces the input byte-exactly") {
    const char* inputs[] = {
        fixtures::kPeaksQuery,       fixtures::kCastleAreaQuery,  fixtures::kCastleBeneluxQuery,
        fixtures::kCastleBboxQuery,  fixtures::kCastleTuscanyQuery, fixtures::kMoscowRingQuery,
        fixtures::kPharmacyRegexQuery, fixtures::kSubwayBboxQuery,
        "out;",
        "  node [ amenity = cafe ] ; // trailing\n",
        "[maxsize:1073741824][bbox:49.0,8.0,49.5,8.5];way(poly:\"50.7 7.1 50.7 7.2\");out ids;",
    };
    for (const char* q : inputs) {
        auto tokens = tokenize(q);
        CHECK(join_lexemes(tokens) == q);
        // spans ordered, non-overlapping, covering
        std::size_t expect_begin = 0;
        for (const auto& t : tokens) {
            CHECK(t.span.begin == expect_begin);
            CHECK(t.span.end > t.span.begin);
            expect_begin = t.span.end;
        }
        CHECK(expect_begin == std::string(q).size());
    }
}

TEST_CASE("lossless lexing on randomized fragment soup") {
    const char* fragments[] = {
        "node",   "way",    "relation", "[\"a\"=\"b\"]", "[amenity]",  "({{bbox}})",
        "->.x",   ";",      "out meta", "(around:50)",   "//c\n",      "/*block*/",
        " ",      "\n",     "(",        ")",             "{{geocodeArea:\"Ulm\"}}",
        "123",    "45.67",  "\"str\"",  "~\"re\"",       "is_in",      ">",
        ">>",     "<",      "foreach",  "{",             "}",          "if",
    };
    std::mt19937 rng(20240811);
    for (int iter = 0; iter < 500; ++iter) {
        std::string input;
        int pieces = static_cast<int>(rng() % 30);
        for (int i = 0; i < pieces; ++i) input += fragments[rng() % std::size(fragments)];
        std::vector<Token> tokens;
        try {
            tokens = tokenize(input);
        } catch (const LexError&) {
            continue;  // fragment soup can produce unterminated constructs
        }
        CHECK(join_lexemes(tokens) == input);
    }
}

TEST_CASE("unterminated constructs raise lex errors with spans") {
    CHECK_THROWS_AS(tokenize("node[\"natural"), LexError);
    CHECK_THROWS_AS(tokenize("/* never closed"), LexError);
    CHECK_THROWS_AS(tokenize("{{bbox"), LexError);
    CHECK_THROWS_AS(tokenize("[\"k\"~\"pat"), LexError);
    try {
        tokenize("out;/* x");
        FAIL("expected LexError");
    } catch (const LexError& e) {
        CHECK(e.span().begin == 4);
        CHECK(e.pos().line == 1);
        CHECK(e.pos().column == 5);
    }
}
