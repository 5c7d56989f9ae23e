#include "oracle/reference_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

namespace {

// own decoder: returns the sequence of code points, malformed bytes as-is
std::vector<long> code_points(std::string_view s) {
    std::vector<long> out;
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        int extra;
        long cp;
        if (c < 0x80) { extra = 0; cp = c; }
        else if ((c >> 5) == 0x6) { extra = 1; cp = c & 0x1F; }
        else if ((c >> 4) == 0xE) { extra = 2; cp = c & 0x0F; }
        else if ((c >> 3) == 0x1E) { extra = 3; cp = c & 0x07; }
        else { out.push_back(c); ++i; continue; }
        if (i + extra >= s.size()) { out.push_back(c); ++i; continue; }
        bool ok = true;
        long acc = cp;
        for (int k = 1; k <= extra; ++k) {
            unsigned char cc = static_cast<unsigned char>(s[i + k]);
            if ((cc >> 6) != 0x2) { ok = false; break; }
            acc = (acc << 6) | (cc & 0x3F);
        }
        if (!ok) { out.push_back(c); ++i; continue; }
        out.push_back(acc);
        i += 1 + extra;
    }
    return out;
}

using Gram = std::vector<long>;

std::map<Gram, long> gram_counts(const std::vector<long>& points, int order) {
    std::map<Gram, long> counts;
    if (points.size() < static_cast<std::size_t>(order)) return counts;
    for (std::size_t i = 0; i + order <= points.size(); ++i) {
        Gram g(points.begin() + static_cast<long>(i), points.begin() + static_cast<long>(i) + order);
        counts[g] += 1;
    }
    return counts;
}

long overlap(const std::map<Gram, long>& a, const std::map<Gram, long>& b) {
    long total = 0;
    for (const auto& [gram, count] : a) {
        auto it = b.find(gram);
        if (it != b.end()) total += std::min(count, it->second);
    }
    return total;
}

std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace

double reference_chrf(std::string_view hyp, std::string_view ref) {
    const int max_order = 6;
    const double beta = 2.0;
    auto h = code_points(hyp);
    auto r = code_points(ref);
    if (h.empty() && r.empty()) return 1.0;

    double precision_total = 0.0;
    double recall_total = 0.0;
    int used_orders = 0;
    for (int order = 1; order <= max_order; ++order) {
        auto hc = gram_counts(h, order);
        auto rc = gram_counts(r, order);
        long h_total = 0, r_total = 0;
        for (const auto& [g, c] : hc) h_total += c;
        for (const auto& [g, c] : rc) r_total += c;
        if (h_total == 0 || r_total == 0) continue;
        long both = overlap(hc, rc);
        precision_total += static_cast<double>(both) / static_cast<double>(h_total);
        recall_total += static_cast<double>(both) / static_cast<double>(r_total);
        used_orders += 1;
    }
    if (used_orders == 0) return 0.0;
    double precision = precision_total / used_orders;
    double recall = recall_total / used_orders;
    if (precision + recall == 0.0) return 0.0;
    return (1.0 + beta * beta) * precision * recall / (beta * beta * precision + recall);
}

double reference_bleu(std::string_view hyp, std::string_view ref) {
    auto h = words(hyp);
    auto r = words(ref);
    if (h.empty() && r.empty()) return 1.0;
    if (h.empty() || r.empty()) return 0.0;

    double log_precision_sum = 0.0;
    for (int order = 1; order <= 4; ++order) {
        std::map<std::vector<std::string>, long> hc, rc;
        for (std::size_t i = 0; i + order <= h.size(); ++i)
            hc[std::vector<std::string>(h.begin() + static_cast<long>(i),
                                        h.begin() + static_cast<long>(i) + order)] += 1;
        for (std::size_t i = 0; i + order <= r.size(); ++i)
            rc[std::vector<std::string>(r.begin() + static_cast<long>(i),
                                        r.begin() + static_cast<long>(i) + order)] += 1;
        long clipped = 0, total = 0;
        for (const auto& [gram, count] : hc) {
            total += count;
            auto it = rc.find(gram);
            if (it != rc.end()) clipped += std::min(count, it->second);
        }
        double p;
        if (order == 1) {
            if (clipped == 0) return 0.0;
            p = static_cast<double>(clipped) / static_cast<double>(total);
        } else {
            p = (static_cast<double>(clipped) + 1.0) / (static_cast<double>(total) + 1.0);
        }
        log_precision_sum += std::log(p);
    }
    double geo_mean = std::exp(log_precision_sum / 4.0);
    double brevity = 1.0;
    if (h.size() < r.size())
        brevity = std::exp(1.0 - static_cast<double>(r.size()) / static_cast<double>(h.size()));
    return brevity * geo_mean;
}

double reference_kvs(const ovql::oql::KvSet& a, const ovql::oql::KvSet& b) {
    auto members = [](const ovql::oql::KvSet& s) {
        std::vector<std::string> out;
        for (const auto& [k, v] : s.pairs) out.push_back("pair|" + k + "|" + v);
        for (const auto& k : s.keys) out.push_back("key|" + k);
        for (const auto& v : s.values) out.push_back("value|" + v);
        std::sort(out.begin(), out.end());
        return out;
    };
    auto ma = members(a);
    auto mb = members(b);
    if (ma.empty() && mb.empty()) return 1.0;
    if (ma.empty() || mb.empty()) return 0.0;
    std::vector<std::string> common;
    std::set_intersection(ma.begin(), ma.end(), mb.begin(), mb.end(), std::back_inserter(common));
    return static_cast<double>(common.size()) / static_cast<double>(std::max(ma.size(), mb.size()));
}

namespace {

void enumerate_subtrees(const ovql::oql::SyntaxTree& t, std::vector<std::string>& out,
                        std::string& self) {
    std::ostringstream os;
    os << "(" << t.label;
    for (const auto& child : t.children) {
        std::string child_repr;
        enumerate_subtrees(child, out, child_repr);
        os << " " << child_repr;
    }
    os << ")";
    self = os.str();
    out.push_back(self);
}

}  // namespace

double reference_trees(const ovql::oql::SyntaxTree& a, const ovql::oql::SyntaxTree& b) {
    std::vector<std::string> sa, sb;
    std::string ignore;
    enumerate_subtrees(a, sa, ignore);
    enumerate_subtrees(b, sb, ignore);
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    std::vector<std::string> common;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
    return static_cast<double>(common.size()) / static_cast<double>(std::max(sa.size(), sb.size()));
}

}  // namespace oracle
