#pragma once

#include "core/dataset.hpp"
#include "core/providers.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ovql::difficulty {

enum class Criterion {
    InputLength,
    QueryLength,
    SyntacticUnits,
    MaxInputSimilarity,
    MaxQueryOqs,
};

const char* criterion_name(Criterion c);
std::optional<Criterion> criterion_from_name(std::string_view name);
inline constexpr Criterion kAllCriteria[] = {
    Criterion::InputLength, Criterion::QueryLength, Criterion::SyntacticUnits,
    Criterion::MaxInputSimilarity, Criterion::MaxQueryOqs};

// Raw criterion value: character lengths, syntactic units, or the maximum
// similarity to any training instance (cosine for inputs, OQS for queries).
// Lengths grow with difficulty; similarities shrink with difficulty.
// Throws std::invalid_argument when a required train set or provider is
// missing. Training queries that do not parse are skipped as OQS references.
double score(const dataset::Instance& instance, Criterion criterion,
             const std::vector<const dataset::Instance*>& train,
             harness::EmbeddingProvider* provider);

struct ScoredInstance {
    std::string id;
    double score = 0.0;
};

enum class Bucket { Easy, Medium, Hard };

const char* bucket_name(Bucket b);

struct Partition {
    std::vector<std::string> easy;
    std::vector<std::string> medium;
    std::vector<std::string> hard;
    std::vector<ScoredInstance> scores;  // evaluation order: easy..hard
};

// Deterministic thirds of the evaluation split, ordered from easy to hard.
// Ties break by instance id. Sizes differ by at most one; the extra
// instances go to the easier buckets (1,000 -> 334/333/333).
Partition partition(const dataset::Corpus& corpus, dataset::Split split, Criterion criterion,
                    harness::EmbeddingProvider* provider = nullptr, int jobs = 0);

// id<TAB>criterion<TAB>score<TAB>bucket
std::string partition_tsv(const Partition& p, Criterion criterion);

}  // namespace ovql::difficulty
