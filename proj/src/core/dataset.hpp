#pragma once

#include "core/analysis.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace ovql::dataset {

enum class Split { Train, Dev, Test };

const char* split_name(Split s);
std::optional<Split> split_from_name(std::string_view name);

struct Instance {
    std::string id;
    std::string nl;     // natural-language input
    std::string query;  // OverpassQL text
    Split split = Split::Train;
    bool synthetic = false;  // derived from comments rather than annotated

    bool operator==(const Instance&) const = default;
};

class LoadError : public std::runtime_error {
public:
    LoadError(std::string message, std::size_t line)
        : std::runtime_error(std::move(message)), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct Corpus {
    std::vector<Instance> instances;

    const Instance* find(const std::string& id) const;
    std::vector<const Instance*> split_instances(Split s) const;
    std::size_t split_size(Split s) const;

    void rebuild_index();

private:
    std::unordered_map<std::string, std::size_t> index_;
};

// JSONL with fields id, nl, query, split; one object per line. Throws
// LoadError naming the offending line on malformed records, missing fields,
// duplicate ids, or unknown split labels.
Corpus load(const std::filesystem::path& path);
void save(const Corpus& corpus, const std::filesystem::path& path);

struct ParseFailure {
    std::string id;
    std::string message;  // includes line/column within the query
};

struct StatsReport {
    std::size_t total = 0;
    std::size_t train = 0, dev = 0, test = 0;
    std::size_t distinct_input_words = 0;
    double mean_input_chars = 0.0;
    double mean_query_chars = 0.0;
    double mean_syntactic_units = 0.0;  // over parsed queries
    std::size_t distinct_templates = 0;
    std::size_t unique_keys = 0;
    std::size_t unique_values = 0;
    std::size_t unique_pairs = 0;
    // queries containing each feature, by taxonomy index
    std::array<std::size_t, oql::kFeatureCount> feature_counts{};
    std::size_t parsed = 0;
    std::vector<ParseFailure> failures;

    double feature_prevalence(oql::Feature f) const;  // fraction of all queries
};

// Deterministic and independent of instance order. Unparsable queries are
// excluded from the parse-dependent numbers and reported in failures.
StatsReport stats(const Corpus& corpus);

std::string render_stats(const StatsReport& report);

struct SplitViolation {
    std::string train_id;
    std::string eval_id;
    std::string side;  // "query" or "input"
};

// Train/eval leakage check: equal normalized query templates or equal
// normalized inputs (lowercased, punctuation stripped, whitespace collapsed).
std::vector<SplitViolation> validate_splits(const Corpus& corpus);

// One synthetic train instance per commented train query: the comments,
// joined by single spaces, become the input; the comment-stripped query is
// the target. Queries whose comments are all empty are skipped.
std::vector<Instance> comment_instances(const Corpus& corpus);

// key<TAB>global usage count, sorted descending
using KeyUsageTable = std::vector<std::pair<std::string, std::uint64_t>>;

KeyUsageTable load_key_usage(const std::filesystem::path& path);

// Fraction of global key usage covered by the keys appearing in the corpus.
double key_coverage(const Corpus& corpus, const KeyUsageTable& table);

}  // namespace ovql::dataset
