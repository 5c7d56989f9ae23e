#include "core/metrics.hpp"

#include "core/parser.hpp"
#include "core/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

namespace ovql::metrics {

namespace {

constexpr int kChrfOrder = 6;
constexpr double kChrfBeta = 2.0;
constexpr int kBleuOrder = 4;

std::u32string decode_points(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) out.push_back(text::utf8_decode(s, i));
    return out;
}

// multiset intersection size of n-grams of the given order
std::size_t ngram_matches(const std::u32string& a, const std::u32string& b, int n) {
    if (a.size() < static_cast<std::size_t>(n) || b.size() < static_cast<std::size_t>(n)) return 0;
    std::unordered_map<std::u32string, int> counts;
    for (std::size_t i = 0; i + n <= a.size(); ++i) ++counts[a.substr(i, n)];
    std::size_t matches = 0;
    for (std::size_t i = 0; i + n <= b.size(); ++i) {
        auto it = counts.find(b.substr(i, n));
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++matches;
        }
    }
    return matches;
}

std::size_t ngram_total(const std::u32string& s, int n) {
    return s.size() >= static_cast<std::size_t>(n) ? s.size() - n + 1 : 0;
}

}  // namespace

std::string format_percent(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", value * 100.0);
    return buf;
}

std::string Score::display() const { return format_percent(value); }

Score chrf(std::string_view hyp, std::string_view ref) {
    std::u32string h = decode_points(hyp);
    std::u32string r = decode_points(ref);
    double prec_sum = 0.0, rec_sum = 0.0;
    int effective_orders = 0;
    for (int n = 1; n <= kChrfOrder; ++n) {
        std::size_t nh = ngram_total(h, n);
        std::size_t nr = ngram_total(r, n);
        if (nh == 0 || nr == 0) continue;
        auto m = static_cast<double>(ngram_matches(h, r, n));
        prec_sum += m / static_cast<double>(nh);
        rec_sum += m / static_cast<double>(nr);
        ++effective_orders;
    }
    if (effective_orders == 0) return Score{h.empty() && r.empty() ? 1.0 : 0.0};
    double p = prec_sum / effective_orders;
    double rr = rec_sum / effective_orders;
    if (p + rr == 0.0) return Score{0.0};
    double b2 = kChrfBeta * kChrfBeta;
    return Score{(1.0 + b2) * p * rr / (b2 * p + rr)};
}

namespace {

// pairs, keys and values live in disjoint namespaces
std::set<std::string> kv_members(const oql::KvSet& s) {
    std::set<std::string> out;
    for (const auto& [k, v] : s.pairs) out.insert("p\x1F" + k + "\x1F" + v);
    for (const auto& k : s.keys) out.insert("k\x1F" + k);
    for (const auto& v : s.values) out.insert("v\x1F" + v);
    return out;
}

}  // namespace

Score kvs(const oql::KvSet& a, const oql::KvSet& b) {
    auto ma = kv_members(a);
    auto mb = kv_members(b);
    if (ma.empty() && mb.empty()) return Score{1.0};
    if (ma.empty() || mb.empty()) return Score{0.0};
    std::size_t inter = 0;
    for (const auto& m : ma) inter += mb.count(m);
    return Score{static_cast<double>(inter) /
                 static_cast<double>(std::max(ma.size(), mb.size()))};
}

Score trees(const oql::SyntaxTree& a, const oql::SyntaxTree& b) {
    auto sa = oql::all_subtrees(a);
    auto sb = oql::all_subtrees(b);
    std::unordered_map<std::string, int> counts;
    for (auto& s : sa) ++counts[s];
    std::size_t matches = 0;
    for (auto& s : sb) {
        auto it = counts.find(s);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++matches;
        }
    }
    return Score{static_cast<double>(matches) /
                 static_cast<double>(std::max(sa.size(), sb.size()))};
}

OqsBreakdown oqs(const oql::RawQuery& hyp, const oql::RawQuery& ref) {
    OqsBreakdown out;
    out.chrf = chrf(hyp.text, ref.text);
    oql::QueryAst ref_ast = oql::parse(ref.text);  // reference must parse
    try {
        oql::QueryAst hyp_ast = oql::parse(hyp.text);
        oql::KvSet hyp_kv = oql::extract_kv(hyp_ast);
        oql::KvSet ref_kv = oql::extract_kv(ref_ast);
        out.kvs_both_empty = hyp_kv.empty() && ref_kv.empty();
        out.kvs = kvs(hyp_kv, ref_kv);
        out.trees = trees(oql::to_syntax_tree(hyp_ast), oql::to_syntax_tree(ref_ast));
    } catch (const oql::ParseError&) {
        out.hyp_parsed = false;
    } catch (const oql::LexError&) {
        out.hyp_parsed = false;
    }
    if (!out.hyp_parsed) {
        out.kvs = Score{0.0};
        out.trees = Score{0.0};
    }
    out.oqs = Score{(out.chrf.value + out.kvs.value + out.trees.value) / 3.0};
    return out;
}

bool em(std::string_view hyp, std::string_view ref) {
    return text::compose_latin(text::trim(hyp)) == text::compose_latin(text::trim(ref));
}

Score bleu(std::string_view a, std::string_view b) {
    auto h = text::split_ws(a);
    auto r = text::split_ws(b);
    if (h.empty() || r.empty()) return Score{h.empty() && r.empty() ? 1.0 : 0.0};

    double log_sum = 0.0;
    for (int n = 1; n <= kBleuOrder; ++n) {
        std::unordered_map<std::string, int> ref_counts;
        for (std::size_t i = 0; i + n <= r.size(); ++i) {
            std::string gram;
            for (int k = 0; k < n; ++k) {
                gram += r[i + k];
                gram += '\x1F';
            }
            ++ref_counts[gram];
        }
        std::size_t total = h.size() >= static_cast<std::size_t>(n) ? h.size() - n + 1 : 0;
        std::size_t matched = 0;
        for (std::size_t i = 0; i + n <= h.size(); ++i) {
            std::string gram;
            for (int k = 0; k < n; ++k) {
                gram += h[i + k];
                gram += '\x1F';
            }
            auto it = ref_counts.find(gram);
            if (it != ref_counts.end() && it->second > 0) {
                --it->second;
                ++matched;
            }
        }
        double p;
        if (n == 1) {
            p = static_cast<double>(matched) / static_cast<double>(total);
            if (p == 0.0) return Score{0.0};
        } else {
            p = (static_cast<double>(matched) + 1.0) / (static_cast<double>(total) + 1.0);
        }
        log_sum += std::log(p);
    }
    double precision = std::exp(log_sum / kBleuOrder);
    double bp = h.size() >= r.size()
                    ? 1.0
                    : std::exp(1.0 - static_cast<double>(r.size()) / static_cast<double>(h.size()));
    return Score{bp * precision};
}

const char* osm_kind_name(OsmKind k) {
    switch (k) {
        case OsmKind::Node: return "node";
        case OsmKind::Way: return "way";
        case OsmKind::Relation: return "relation";
        case OsmKind::Area: return "area";
        case OsmKind::Derived: return "derived";
    }
    return "?";
}

bool ex(const ElementSet& generated, const ElementSet& reference) {
    return generated == reference;
}

Score ex_soft(const ElementSet& generated, const ElementSet& reference) {
    if (generated.empty() && reference.empty()) return Score{1.0};
    if (generated.empty() || reference.empty()) return Score{0.0};
    std::size_t inter = 0;
    for (const auto& e : generated) inter += reference.count(e);
    return Score{static_cast<double>(inter) /
                 static_cast<double>(std::max(generated.size(), reference.size()))};
}

}  // namespace ovql::metrics
