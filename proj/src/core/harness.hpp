#pragma once

#include "core/dataset.hpp"
#include "core/executor.hpp"
#include "core/metrics.hpp"
#include "core/providers.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ovql::harness {

// ---- shot selection ----

enum class ShotMode { Random, RetrievalBleu, RetrievalEmbedding };

const char* shot_mode_name(ShotMode m);
std::optional<ShotMode> shot_mode_from_name(std::string_view name);

struct ShotStrategy {
    ShotMode mode = ShotMode::RetrievalBleu;
    int k = 5;
    std::uint64_t seed = 0;  // required for Random
};

// The k in-context examples for one input, in prompt order: least similar
// first, most similar last (nearest to the current input). Random mode
// samples without replacement from the seeded generator. Throws
// std::invalid_argument when k exceeds the train set or a needed provider is
// missing.
std::vector<const dataset::Instance*> select_shots(
    const std::string& input, const std::vector<const dataset::Instance*>& train,
    const ShotStrategy& strategy, EmbeddingProvider* provider = nullptr);

// ---- prompts ----

std::string build_prompt(const std::vector<const dataset::Instance*>& shots,
                         const std::string& input);

struct RefineShot {
    std::string input;
    std::string hypothesis;
    std::string improved;
};

// feedback == nullopt omits the execution-feedback paragraph entirely.
std::string build_refine_prompt(const std::string& input, const std::string& hypothesis,
                                const std::optional<std::string>& feedback,
                                const std::vector<RefineShot>& shots);

// generation stops when the model starts the next example block
inline constexpr std::string_view kStopSequence = "\n\nInput:";

// Strips a stop-sequence tail, surrounding code fences and outer whitespace
// from a model completion.
std::string clean_completion(std::string_view completion);

// ---- generation clients ----

class GenerationError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class GenerationClient {
public:
    virtual ~GenerationClient() = default;
    virtual std::string generate(const std::string& prompt,
                                 const std::vector<std::string>& stop,
                                 std::size_t max_length) = 0;
};

// JSONL map file, one object per line: {"prompt_sha256": ..., "completion": ...}
class FixtureGenerationClient : public GenerationClient {
public:
    explicit FixtureGenerationClient(const std::filesystem::path& path);
    std::string generate(const std::string& prompt, const std::vector<std::string>& stop,
                         std::size_t max_length) override;

private:
    std::unordered_map<std::string, std::string> completions_;
};

// POST {prompt, stop, max_length} as JSON, expects {"completion": ...};
// bearer token from the GEN_CLIENT_TOKEN environment variable when set.
class HttpGenerationClient : public GenerationClient {
public:
    explicit HttpGenerationClient(std::string endpoint);
    std::string generate(const std::string& prompt, const std::vector<std::string>& stop,
                         std::size_t max_length) override;

private:
    std::string endpoint_;
};

// ---- predictions ----

struct Prediction {
    std::string id;
    std::string query;
    bool operator==(const Prediction&) const = default;
};

struct Predictions {
    std::vector<Prediction> items;

    const Prediction* find(const std::string& id) const;
    void upsert(const std::string& id, std::string query);
};

// JSONL with fields id, query
Predictions load_predictions(const std::filesystem::path& path);
void save_predictions(const Predictions& predictions, const std::filesystem::path& path);

// ---- evaluation ----

struct EvalRow {
    std::string id;
    metrics::Score chrf, kvs, trees, oqs;
    bool em = false;
    bool prediction_missing = false;
    // execution fields, meaningful when executed
    bool executed = false;
    exec::ExecutionStatus status = exec::ExecutionStatus::Ok;
    bool reference_failed = false;
    bool ex = false;
    metrics::Score ex_soft;
};

struct EvalAggregates {
    std::size_t rows = 0;
    metrics::Score chrf, kvs, trees, oqs;  // arithmetic means
    double em_rate = 0.0;
    std::size_t missing_predictions = 0;
    // grounded numbers; ex/ex_soft average over rows whose reference executed
    std::size_t executed = 0;
    std::size_t reference_failures = 0;
    std::size_t errors = 0;  // generated queries rejected by the server parser
    double ex_rate = 0.0;
    metrics::Score ex_soft;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    EvalAggregates aggregates;
};

// Scores every instance of the split against its prediction; a missing
// prediction scores as the empty string and is flagged. With an executor,
// reference and prediction are both executed for EX / EX_soft / #Errors;
// instances whose reference fails are excluded from the execution aggregates
// and counted as reference_failures.
EvalReport run_eval(const dataset::Corpus& corpus, dataset::Split split,
                    const Predictions& predictions, exec::Executor* executor = nullptr,
                    int jobs = 1);

// id, chrf, kvs, trees, oqs, em, status, ex, ex_soft
std::string report_tsv(const EvalReport& report);
// aligned summary table in the percentage convention
std::string report_table(const EvalReport& report);

// ---- self-refinement ----

enum class RefineMode { Off, ErrorsOnly, All };

const char* refine_mode_name(RefineMode m);
std::optional<RefineMode> refine_mode_from_name(std::string_view name);

struct RefinePolicy {
    RefineMode mode = RefineMode::Off;
    bool with_feedback = true;
    int feedback_samples = 1;
};

struct RefineRecord {
    std::string id;
    bool refined = false;
    bool client_failed = false;
};

struct RefineResult {
    Predictions predictions;
    std::vector<RefineRecord> records;
};

// One refinement round. ErrorsOnly touches exactly the instances whose
// baseline execution raises a server syntax error; everything else passes
// through byte-identical. All refines every instance with a prediction. On a
// client failure the baseline prediction is kept and the record flagged.
RefineResult self_refine(const dataset::Corpus& corpus, dataset::Split split,
                         const Predictions& baseline, const RefinePolicy& policy,
                         GenerationClient* client, exec::Executor* executor,
                         const ShotStrategy& strategy, EmbeddingProvider* provider = nullptr);

}  // namespace ovql::harness
