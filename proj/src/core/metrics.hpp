#pragma once

#include "core/analysis.hpp"
#include "core/syntax_tree.hpp"

#include <cstdint>
#include <set>
#include <string>
#include <string_view>

namespace ovql::metrics {

// A metric value in [0,1], displayed as a percentage with one decimal.
struct Score {
    double value = 0.0;

    std::string display() const;  // e.g. 0.333 -> "33.3"
    bool operator==(const Score&) const = default;
};

std::string format_percent(double value);

// Character n-gram F-score, order 6, beta = 2, whitespace significant,
// n-grams over code points. Both inputs empty scores 1, exactly one empty
// scores 0.
Score chrf(std::string_view hyp, std::string_view ref);

// Key Value Similarity: |KV(a) n KV(b)| / max(|KV(a)|, |KV(b)|) where KV(x)
// is the union of pairs, keys and values, kept in disjoint namespaces.
// Both empty -> 1, exactly one empty -> 0.
Score kvs(const oql::KvSet& a, const oql::KvSet& b);

// Matching-subtree fraction: multiset intersection of canonical subtree
// serializations over the maximum subtree count.
Score trees(const oql::SyntaxTree& a, const oql::SyntaxTree& b);

struct OqsBreakdown {
    Score chrf;
    Score kvs;
    Score trees;
    Score oqs;  // arithmetic mean of the three
    bool hyp_parsed = true;
    bool kvs_both_empty = false;  // the both-empty -> 1.0 convention fired
};

// Mean of chrF, KVS and TreeS. A hypothesis that fails to parse keeps its
// raw-string chrF and scores 0 on the structural components. Throws
// ParseError/LexError when the reference does not parse.
OqsBreakdown oqs(const oql::RawQuery& hyp, const oql::RawQuery& ref);

// Exact string match after trimming outer whitespace and composing the
// common Latin combining sequences.
bool em(std::string_view hyp, std::string_view ref);

// Sentence BLEU on whitespace tokens, max order 4, add-one smoothing on the
// higher-order precisions, with brevity penalty. Used for shot retrieval.
Score bleu(std::string_view a, std::string_view b);

// ---- element identity ----

enum class OsmKind : std::uint8_t { Node, Way, Relation, Area, Derived };

const char* osm_kind_name(OsmKind k);

// Identity is (kind, id); synthetic elements produced by make/convert have no
// stable OSM id and fall back to a content hash.
struct ElementRef {
    OsmKind kind = OsmKind::Node;
    std::uint64_t id = 0;
    std::string content_hash;  // only for kind == Derived

    auto operator<=>(const ElementRef&) const = default;
};

using ElementSet = std::set<ElementRef>;

// Exact match of returned elements.
bool ex(const ElementSet& generated, const ElementSet& reference);

// Overlap normalized by the larger set; both empty -> 1.
Score ex_soft(const ElementSet& generated, const ElementSet& reference);

}  // namespace ovql::metrics
