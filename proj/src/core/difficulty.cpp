#include "core/difficulty.hpp"

#include "core/metrics.hpp"
#include "core/parser.hpp"
#include "core/syntax_tree.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <thread>

namespace ovql::difficulty {

const char* criterion_name(Criterion c) {
    switch (c) {
        case Criterion::InputLength: return "input_length";
        case Criterion::QueryLength: return "query_length";
        case Criterion::SyntacticUnits: return "syntactic_units";
        case Criterion::MaxInputSimilarity: return "max_input_similarity";
        case Criterion::MaxQueryOqs: return "max_query_oqs";
    }
    return "?";
}

std::optional<Criterion> criterion_from_name(std::string_view name) {
    for (Criterion c : kAllCriteria)
        if (name == criterion_name(c)) return c;
    return std::nullopt;
}

const char* bucket_name(Bucket b) {
    switch (b) {
        case Bucket::Easy: return "easy";
        case Bucket::Medium: return "medium";
        case Bucket::Hard: return "hard";
    }
    return "?";
}

double score(const dataset::Instance& instance, Criterion criterion,
             const std::vector<const dataset::Instance*>& train,
             harness::EmbeddingProvider* provider) {
    switch (criterion) {
        case Criterion::InputLength:
            return static_cast<double>(text::utf8_length(instance.nl));
        case Criterion::QueryLength:
            return static_cast<double>(text::utf8_length(instance.query));
        case Criterion::SyntacticUnits:
            try {
                return static_cast<double>(oql::count_syntactic_units(oql::parse(instance.query)));
            } catch (const std::exception&) {
                return 0.0;
            }
        case Criterion::MaxInputSimilarity: {
            if (!provider)
                throw std::invalid_argument("max_input_similarity needs an embedding provider");
            if (train.empty()) throw std::invalid_argument("similarity criteria need a train set");
            auto own = provider->embed(instance.nl);
            double best = -1.0;
            for (const auto* t : train) best = std::max(best, harness::cosine(own, provider->embed(t->nl)));
            return best;
        }
        case Criterion::MaxQueryOqs: {
            if (train.empty()) throw std::invalid_argument("similarity criteria need a train set");
            double best = 0.0;
            oql::RawQuery hyp{instance.query, instance.id};
            for (const auto* t : train) {
                try {
                    best = std::max(best,
                                    metrics::oqs(hyp, oql::RawQuery{t->query, t->id}).oqs.value);
                } catch (const std::exception&) {
                    // train query does not parse; not usable as an OQS reference
                }
            }
            return best;
        }
    }
    return 0.0;
}

namespace {

bool harder_is_larger(Criterion c) {
    return c == Criterion::InputLength || c == Criterion::QueryLength ||
           c == Criterion::SyntacticUnits;
}

}  // namespace

Partition partition(const dataset::Corpus& corpus, dataset::Split split, Criterion criterion,
                    harness::EmbeddingProvider* provider, int jobs) {
    auto eval = corpus.split_instances(split);
    auto train = corpus.split_instances(dataset::Split::Train);

    std::vector<ScoredInstance> scored(eval.size());
    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    jobs = std::max(1, std::min<int>(jobs, static_cast<int>(eval.size())));

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < eval.size(); i = next.fetch_add(1))
            scored[i] = {eval[i]->id, score(*eval[i], criterion, train, provider)};
    };
    if (jobs == 1 || eval.size() < 2) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    bool larger_harder = harder_is_larger(criterion);
    std::sort(scored.begin(), scored.end(), [&](const ScoredInstance& a, const ScoredInstance& b) {
        double ka = larger_harder ? a.score : -a.score;
        double kb = larger_harder ? b.score : -b.score;
        if (ka != kb) return ka < kb;
        return a.id < b.id;
    });

    Partition p;
    p.scores = scored;
    std::size_t n = scored.size();
    std::size_t base = n / 3, extra = n % 3;
    std::size_t easy_n = base + (extra > 0 ? 1 : 0);
    std::size_t medium_n = base + (extra > 1 ? 1 : 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (i < easy_n) p.easy.push_back(scored[i].id);
        else if (i < easy_n + medium_n) p.medium.push_back(scored[i].id);
        else p.hard.push_back(scored[i].id);
    }
    return p;
}

std::string partition_tsv(const Partition& p, Criterion criterion) {
    std::string out = "id\tcriterion\tscore\tbucket\n";
    auto emit = [&](const std::vector<std::string>& ids, Bucket b, std::size_t offset) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            char score_buf[32];
            std::snprintf(score_buf, sizeof(score_buf), "%.6f", p.scores[offset + i].score);
            out += ids[i];
            out += '\t';
            out += criterion_name(criterion);
            out += '\t';
            out += score_buf;
            out += '\t';
            out += bucket_name(b);
            out += '\n';
        }
    };
    emit(p.easy, Bucket::Easy, 0);
    emit(p.medium, Bucket::Medium, p.easy.size());
    emit(p.hard, Bucket::Hard, p.easy.size() + p.medium.size());
    return out;
}

}  // namespace ovql::difficulty
