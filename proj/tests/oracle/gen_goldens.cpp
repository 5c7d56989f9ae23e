// Regenerates the golden metric files from the reference implementations.
// Run manually from the repo root:
//   build/tests/gen_goldens tests/data
// The outputs are committed; the test suites treat them as frozen.

#include "oracle/reference_metrics.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace {

std::vector<std::pair<std::string, std::string>> chrf_pairs() {
    std::vector<std::pair<std::string, std::string>> pairs = {
        {"node;out;", "node;out meta;"},
        {"node[\"natural\"=\"peak\"];out;", "node[\"natural\"=\"peak\"];out body;"},
        {"[out:json][timeout:25];node[amenity=cafe]({{bbox}});out;",
         "[out:json][timeout:25];node[amenity=bar]({{bbox}});out;"},
        {"way[highway=primary];out geom;", "way[highway=secondary];out geom;"},
        {"{{geocodeArea:\"Troms\"}}->.a;node(area.a);out;",
         "{{geocodeArea:\"Berlin\"}}->.b;node(area.b);out;"},
        {"rel[boundary=administrative];out ids;", "relation[boundary=administrative];out ids;"},
        {"node(50.1,7.1,50.2,7.2);out;", "node(50.1,7.1,50.2,7.3);out skel;"},
        {"abc", "abcd"},
        {"a", "a"},
        {"a", "b"},
        {"", "node;"},
        {"out;", "out;"},
    };
    std::mt19937 rng(421853);
    const char alphabet[] = "nodewayrel[]{};:\"=~ ,.()";
    while (pairs.size() < 50) {
        auto make = [&]() {
            std::string s;
            std::size_t len = 1 + rng() % 40;
            for (std::size_t i = 0; i < len; ++i)
                s.push_back(alphabet[rng() % (sizeof(alphabet) - 1)]);
            return s;
        };
        pairs.emplace_back(make(), make());
    }
    pairs.resize(50);
    return pairs;
}

std::vector<std::pair<std::string, std::string>> bleu_pairs() {
    std::vector<std::pair<std::string, std::string>> pairs = {
        {"all peaks in Troms", "all peaks near Troms"},
        {"all peaks in Troms", "all peaks in Troms"},
        {"find all drinking water fountains in the city",
         "find drinking water fountains in the city center"},
        {"castles in Tuscany", "castles in current view"},
        {"ATMs and banks with ATMs in Berlin", "atms in Germany"},
        {"pharmacies named Apteka", "pharmacy named Apteka in Wroclaw"},
        {"one two three four five", "one two three four five six"},
        {"a b c d", "d c b a"},
        {"alpha", "alpha"},
        {"alpha beta", "gamma delta"},
    };
    std::mt19937 rng(98371);
    const char* words[] = {"all",   "peaks", "in",     "near",  "the",   "find", "show",
                           "every", "cafe",  "bridge", "city",  "area",  "map",  "list",
                           "nodes", "ways",  "with",   "name",  "tagged"};
    while (pairs.size() < 50) {
        auto make = [&]() {
            std::string s;
            std::size_t len = 1 + rng() % 10;
            for (std::size_t i = 0; i < len; ++i) {
                if (i) s.push_back(' ');
                s += words[rng() % std::size(words)];
            }
            return s;
        };
        pairs.emplace_back(make(), make());
    }
    pairs.resize(50);
    return pairs;
}

void write_tsv(const std::string& path,
               const std::vector<std::pair<std::string, std::string>>& pairs,
               double (*metric)(std::string_view, std::string_view)) {
    std::ofstream out(path);
    for (const auto& [hyp, ref] : pairs) {
        char score[32];
        std::snprintf(score, sizeof(score), "%.9f", metric(hyp, ref));
        out << hyp << '\t' << ref << '\t' << score << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    std::string dir = argc > 1 ? argv[1] : "tests/data";
    write_tsv(dir + "/chrf_golden.tsv", chrf_pairs(), &oracle::reference_chrf);
    write_tsv(dir + "/bleu_golden.tsv", bleu_pairs(), &oracle::reference_bleu);
    std::printf("wrote %s/chrf_golden.tsv and %s/bleu_golden.tsv\n", dir.c_str(), dir.c_str());
    return 0;
}
