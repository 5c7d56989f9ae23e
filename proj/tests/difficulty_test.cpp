#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "core/difficulty.hpp"
#include "core/metrics.hpp"

#include <algorithm>
#include <set>

using namespace ovql;
using namespace ovql::difficulty;
using dataset::Corpus;
using dataset::Instance;
using dataset::Split;

namespace {

Corpus synthetic_corpus(std::size_t test_count) {
    Corpus corpus;
    for (int i = 0; i < 5; ++i) {
        Instance t;
        t.id = "train-" + std::to_string(i);
        t.nl = "training input number " + std::to_string(i);
        t.query = "node[\"amenity\"=\"cafe\"](" + std::to_string(i + 1) + ");out;";
        t.split = Split::Train;
        corpus.instances.push_back(t);
    }
    for (std::size_t i = 0; i < test_count; ++i) {
        Instance e;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04zu", i);
        e.id = std::string("test-") + buf;
        e.nl = "evaluation input " + std::string(i % 7, 'x');
        e.query = "way[\"highway\"](" + std::to_string(i) + ");out;";
        e.split = Split::Test;
        corpus.instances.push_back(e);
    }
    corpus.rebuild_index();
    return corpus;
}

}  // namespace

TEST_CASE("length criteria count characters") {
    Instance inst;
    inst.nl = "All peaks in Troms.";
    inst.query = "out;";
    CHECK(score(inst, Criterion::InputLength, {}, nullptr) == 19.0);
    CHECK(score(inst, Criterion::QueryLength, {}, nullptr) == 4.0);
    // non-ASCII counts in code points
    Instance uni;
    uni.nl = "caf\xC3\xA9";
    CHECK(score(uni, Criterion::InputLength, {}, nullptr) == 4.0);
}

TEST_CASE("appending characters strictly increases input length") {
    Instance inst;
    inst.nl = "peaks";
    double before = score(inst, Criterion::InputLength, {}, nullptr);
    inst.nl += "!";
    CHECK(score(inst, Criterion::InputLength, {}, nullptr) == before + 1.0);
}

TEST_CASE("syntactic units criterion") {
    Instance inst;
    inst.query = "out;";
    CHECK(score(inst, Criterion::SyntacticUnits, {}, nullptr) == 2.0);
}

TEST_CASE("max query oqs is one for a verbatim train query") {
    Corpus corpus = synthetic_corpus(1);
    auto train = corpus.split_instances(Split::Train);
    Instance eval;
    eval.query = train[2]->query;
    CHECK(score(eval, Criterion::MaxQueryOqs, train, nullptr) == doctest::Approx(1.0));
}

TEST_CASE("max query oqs equals the brute-force maximum over candidates") {
    Corpus corpus = synthetic_corpus(0);
    auto train = corpus.split_instances(Split::Train);
    Instance eval;
    eval.id = "e";
    eval.query = "node[\"amenity\"=\"bar\"](17);out;";
    double expected = 0.0;
    for (const auto* t : train) {
        expected = std::max(expected, metrics::oqs(oql::RawQuery{eval.query, ""},
                                                   oql::RawQuery{t->query, ""})
                                          .oqs.value);
    }
    CHECK(score(eval, Criterion::MaxQueryOqs, train, nullptr) == doctest::Approx(expected));
    CHECK(expected > 0.0);
    CHECK(expected < 1.0);
}

TEST_CASE("max input similarity uses the provider") {
    Corpus corpus = synthetic_corpus(0);
    auto train = corpus.split_instances(Split::Train);
    harness::HashEmbeddingProvider provider(64);
    Instance eval;
    eval.nl = train[0]->nl;  // identical text
    CHECK(score(eval, Criterion::MaxInputSimilarity, train, &provider) == doctest::Approx(1.0));
    CHECK_THROWS_AS(score(eval, Criterion::MaxInputSimilarity, train, nullptr),
                    std::invalid_argument);
}

TEST_CASE("partition sizes for one thousand instances") {
    Corpus corpus = synthetic_corpus(1000);
    Partition p = partition(corpus, Split::Test, Criterion::QueryLength);
    CHECK(p.easy.size() == 334);
    CHECK(p.medium.size() == 333);
    CHECK(p.hard.size() == 333);
}

TEST_CASE("three instances split one per bucket") {
    Corpus corpus = synthetic_corpus(3);
    Partition p = partition(corpus, Split::Test, Criterion::InputLength);
    CHECK(p.easy.size() == 1);
    CHECK(p.medium.size() == 1);
    CHECK(p.hard.size() == 1);
}

TEST_CASE("partitions are a deterministic disjoint cover") {
    Corpus corpus = synthetic_corpus(100);
    for (Criterion c : {Criterion::InputLength, Criterion::QueryLength,
                        Criterion::SyntacticUnits}) {
        Partition a = partition(corpus, Split::Test, c);
        Partition b = partition(corpus, Split::Test, c, nullptr, 1);  // single-threaded
        CHECK(a.easy == b.easy);
        CHECK(a.medium == b.medium);
        CHECK(a.hard == b.hard);

        std::set<std::string> all;
        for (const auto& v : {a.easy, a.medium, a.hard}) all.insert(v.begin(), v.end());
        CHECK(all.size() == 100);
    }
}

TEST_CASE("all-equal scores fall back to the id tie-break") {
    Corpus corpus = synthetic_corpus(1000);
    for (auto& inst : corpus.instances)
        if (inst.split == Split::Test) inst.nl = "same";
    Partition p = partition(corpus, Split::Test, Criterion::InputLength);
    CHECK(p.easy.size() == 334);
    CHECK(p.hard.size() == 333);
    CHECK(std::is_sorted(p.easy.begin(), p.easy.end()));
    CHECK(p.easy.front() == "test-0000");
    CHECK(p.hard.back() == "test-0999");
}

TEST_CASE("similarity criteria invert the direction: lowest similarity is hardest") {
    Corpus corpus = synthetic_corpus(0);
    // three eval instances: one identical to train, one close, one far
    Instance same;
    same.id = "t-same";
    same.nl = "training input number 0";
    same.query = corpus.instances[0].query;
    same.split = Split::Test;
    Instance close;
    close.id = "t-close";
    close.nl = "training input number 9";
    close.query = "node[\"amenity\"=\"cafe\"](9);out meta;";
    close.split = Split::Test;
    Instance far;
    far.id = "t-far";
    far.nl = "zzz completely unrelated";
    far.query = "(way[bridge];rel[route=bicycle];);out geom;>;";
    far.split = Split::Test;
    corpus.instances.push_back(same);
    corpus.instances.push_back(close);
    corpus.instances.push_back(far);
    corpus.rebuild_index();

    Partition p = partition(corpus, Split::Test, Criterion::MaxQueryOqs);
    CHECK(p.easy == std::vector<std::string>{"t-same"});
    CHECK(p.medium == std::vector<std::string>{"t-close"});
    CHECK(p.hard == std::vector<std::string>{"t-far"});

    harness::HashEmbeddingProvider provider(128);
    Partition pi = partition(corpus, Split::Test, Criterion::MaxInputSimilarity, &provider);
    CHECK(pi.easy == std::vector<std::string>{"t-same"});
}

TEST_CASE("tsv rendering") {
    Corpus corpus = synthetic_corpus(3);
    Partition p = partition(corpus, Split::Test, Criterion::InputLength);
    std::string tsv = partition_tsv(p, Criterion::InputLength);
    CHECK(tsv.find("id\tcriterion\tscore\tbucket") == 0);
    CHECK(tsv.find("input_length") != std::string::npos);
    CHECK(tsv.find("hard") != std::string::npos);
    CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 4);  // header + 3 rows
}
