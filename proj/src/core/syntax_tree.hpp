#pragma once

#include "core/ast.hpp"

#include <string>
#include <vector>

namespace ovql::oql {

// Labeled tree form of a query. Labels identify constructs only; tag keys,
// tag values, set names and other open-vocabulary text never appear in them,
// so the tree is anonymized by construction.
//
// Mapping (one node per construct):
//   root                      "script"
//   settings block            "settings", one child "setting:<name>" each
//   statement                 one node per statement, children are its
//                             filters and, for blocks, its member statements
//   filter                    one node, tag filters labeled by operator
// Numbers inside out parameters are flattened to "N".
struct SyntaxTree {
    std::string label;
    std::vector<SyntaxTree> children;

    bool operator==(const SyntaxTree&) const = default;
};

SyntaxTree to_syntax_tree(const QueryAst& ast);

std::size_t node_count(const SyntaxTree& tree);

// Number of nodes of to_syntax_tree (every node roots one subtree).
std::size_t count_syntactic_units(const QueryAst& ast);

// Canonical serialization of the full subtree rooted at the given node.
std::string serialize_subtree(const SyntaxTree& tree);

// Serializations of all subtrees, one entry per node (duplicates kept).
std::vector<std::string> all_subtrees(const SyntaxTree& tree);

// Indented one-node-per-line rendering for CLI output.
std::string render_tree(const SyntaxTree& tree);

}  // namespace ovql::oql
