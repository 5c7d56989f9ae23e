#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "core/parser.hpp"
#include "core/syntax_tree.hpp"
#include "fixtures.hpp"

using namespace ovql::oql;

TEST_CASE("out query maps to a two node tree") {
    auto tree = to_syntax_tree(parse("out;"));
    CHECK(node_count(tree) == 2);
    CHECK(tree.label == "script");
    REQUIRE(tree.children.size() == 1);
    CHECK(tree.children[0].label == "out");
}

TEST_CASE("peaks query node count matches the documented mapping") {
    // script + settings(+2) + macro + node query(+2) + way query(+3) + out
    auto ast = parse(fixtures::kPeaksQuery);
    auto tree = to_syntax_tree(ast);
    CHECK(node_count(tree) == 13);
    CHECK(count_syntactic_units(ast) == 13);
}

TEST_CASE("unit count equals tree node count on assorted queries") {
    const char* inputs[] = {
        fixtures::kCastleAreaQuery, fixtures::kCastleBboxQuery, fixtures::kMoscowRingQuery,
        "out;", "node(1);out;",
    };
    for (const char* q : inputs) {
        auto ast = parse(q);
        CHECK(count_syntactic_units(ast) == node_count(to_syntax_tree(ast)));
    }
}

TEST_CASE("identical queries give identical trees") {
    auto a = to_syntax_tree(parse(fixtures::kCastleTuscanyQuery));
    auto b = to_syntax_tree(parse(fixtures::kCastleTuscanyQuery));
    CHECK(a == b);
}

TEST_CASE("adding a filter strictly increases the unit count") {
    auto base = count_syntactic_units(parse("node[\"amenity\"=\"cafe\"];out;"));
    auto more = count_syntactic_units(parse("node[\"amenity\"=\"cafe\"][\"name\"];out;"));
    CHECK(more == base + 1);
}

TEST_CASE("labels carry no identifiers") {
    auto tree = to_syntax_tree(parse(fixtures::kPeaksQuery));
    // keys, values and set names from the query must not leak into labels
    for (const char* leaked : {"natural", "peak", "searchArea", "Troms", "highway", "cycleway"}) {
        CHECK(serialize_subtree(tree).find(leaked) == std::string::npos);
        (void)leaked;
    }
}

TEST_CASE("subtree serializations are injective on small trees") {
    SyntaxTree leaf_a{"a", {}};
    SyntaxTree leaf_b{"b", {}};
    SyntaxTree nested{"a", {SyntaxTree{"b", {}}}};
    CHECK(serialize_subtree(leaf_a) != serialize_subtree(leaf_b));
    CHECK(serialize_subtree(leaf_a) != serialize_subtree(nested));
    CHECK(all_subtrees(nested).size() == 2);
}
