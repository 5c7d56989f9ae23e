#include "core/harness.hpp"

#include "core/parser.hpp"
#include "core/text.hpp"

#include "json.hpp"
#include "httplib.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace ovql::harness {

using json = nlohmann::ordered_json;

std::vector<float> HttpEmbeddingProvider::embed(const std::string& text) {
    httplib::Client client(base_url_);
    client.set_read_timeout(60, 0);
    json body;
    body["text"] = text;
    auto res = client.Post("/embed", body.dump(), "application/json");
    if (!res || res->status != 200)
        throw std::runtime_error("embedding request failed: " +
                                 (res ? "HTTP " + std::to_string(res->status)
                                      : httplib::to_string(res.error())));
    json payload = json::parse(res->body, nullptr, false);
    if (payload.is_discarded() || !payload.contains("vector") || !payload["vector"].is_array())
        throw std::runtime_error("embedding response has no vector");
    std::vector<float> v = payload["vector"].get<std::vector<float>>();
    double norm = 0;
    for (float x : v) norm += static_cast<double>(x) * x;
    norm = std::sqrt(norm);
    if (norm > 0)
        for (float& x : v) x = static_cast<float>(x / norm);
    if (dim_ == 0) dim_ = v.size();
    if (v.size() != dim_) throw std::runtime_error("embedding dimension changed between calls");
    return v;
}

const char* shot_mode_name(ShotMode m) {
    switch (m) {
        case ShotMode::Random: return "random";
        case ShotMode::RetrievalBleu: return "retrieval_bleu";
        case ShotMode::RetrievalEmbedding: return "retrieval_embedding";
    }
    return "?";
}

std::optional<ShotMode> shot_mode_from_name(std::string_view name) {
    if (name == "random") return ShotMode::Random;
    if (name == "retrieval_bleu" || name == "bleu") return ShotMode::RetrievalBleu;
    if (name == "retrieval_embedding" || name == "embedding") return ShotMode::RetrievalEmbedding;
    return std::nullopt;
}

std::vector<const dataset::Instance*> select_shots(
    const std::string& input, const std::vector<const dataset::Instance*>& train,
    const ShotStrategy& strategy, EmbeddingProvider* provider) {
    if (strategy.k < 0) throw std::invalid_argument("shot count must be non-negative");
    std::size_t k = static_cast<std::size_t>(strategy.k);
    if (k > train.size())
        throw std::invalid_argument("shot count exceeds the training set size");
    if (k == 0) return {};

    if (strategy.mode == ShotMode::Random) {
        std::vector<std::size_t> indices(train.size());
        for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
        std::mt19937_64 rng(strategy.seed);
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + rng() % (indices.size() - i);
            std::swap(indices[i], indices[j]);
        }
        std::vector<const dataset::Instance*> out;
        for (std::size_t i = 0; i < k; ++i) out.push_back(train[indices[i]]);
        return out;
    }

    if (strategy.mode == ShotMode::RetrievalEmbedding && !provider)
        throw std::invalid_argument("retrieval_embedding needs an embedding provider");

    std::vector<std::pair<double, const dataset::Instance*>> ranked;
    ranked.reserve(train.size());
    std::vector<float> own;
    if (strategy.mode == ShotMode::RetrievalEmbedding) own = provider->embed(input);
    for (const auto* t : train) {
        double sim = strategy.mode == ShotMode::RetrievalBleu
                         ? metrics::bleu(t->nl, input).value
                         : cosine(own, provider->embed(t->nl));
        ranked.emplace_back(sim, t);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) {
                         if (a.first != b.first) return a.first > b.first;
                         return a.second->id < b.second->id;
                     });
    // top-k, then least similar first so the best shot sits next to the input
    std::vector<const dataset::Instance*> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(ranked[i].second);
    std::reverse(out.begin(), out.end());
    return out;
}

// ---- prompts ----

namespace {

constexpr std::string_view kTaskLine =
    "The OverpassQL language allows one to formulate questions to the OpenStreetMap database.";

constexpr std::string_view kRefinePreamble =
    "The OverpassQL language allows one to formulate questions to the OpenStreetMap database. "
    "Your goal is, given an Input and a Hypothesis, to produce a improved version of the "
    "Hypothesis. If the Hypothesis is already good enough, do not try to improve it.";

constexpr std::string_view kFeedbackFraming =
    "You will now get part of the Overpass result produced after using the generated Overpass "
    "Query Hypothesis. An error means that you should definitely improve on the Hypothesis. A "
    "normal result could mean that the Overpass Query is good enough, if the output fits to the "
    "asked query:";

}  // namespace

std::string build_prompt(const std::vector<const dataset::Instance*>& shots,
                         const std::string& input) {
    std::string out{kTaskLine};
    out += "\n\n";
    if (!shots.empty()) {
        out += "Here are a few examples:\n\n";
        for (const auto* shot : shots) {
            out += "Input:\n" + shot->nl + "\n\nOverpass Query:\n" + shot->query + "\n\n";
        }
    }
    out += "Input:\n" + input + "\n\nOverpass Query:\n";
    return out;
}

std::string build_refine_prompt(const std::string& input, const std::string& hypothesis,
                                const std::optional<std::string>& feedback,
                                const std::vector<RefineShot>& shots) {
    if (hypothesis.empty()) throw std::invalid_argument("refine prompt needs a hypothesis");
    std::string out{kRefinePreamble};
    out += "\n\n";
    if (!shots.empty()) {
        out += "Here are a few examples:\n\n";
        for (const auto& shot : shots) {
            out += "Input:\n" + shot.input + "\n\nHypothesis:\n" + shot.hypothesis +
                   "\n\nOverpass Query:\n" + shot.improved + "\n\n";
        }
    }
    out += "Here is an Input:\n" + input + "\n\n";
    out += "Here is the Overpass Query Hypothesis produced by a model:\n" + hypothesis + "\n\n";
    if (feedback) {
        out += std::string(kFeedbackFraming) + "\n" + *feedback + "\n\n";
    }
    out += "Improve on the Overpass Query or keep it if it is good enough:\n";
    return out;
}

std::string clean_completion(std::string_view completion) {
    std::string s(completion);
    auto stop = s.find(kStopSequence);
    if (stop != std::string::npos) s.resize(stop);
    std::string_view v = text::trim(s);
    if (text::starts_with(v, "```")) {
        auto nl = v.find('\n');
        v = nl == std::string_view::npos ? std::string_view{} : v.substr(nl + 1);
        auto fence = v.rfind("```");
        if (fence != std::string_view::npos) v = v.substr(0, fence);
        v = text::trim(v);
    }
    return std::string(v);
}

// ---- generation clients ----

FixtureGenerationClient::FixtureGenerationClient(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.good()) throw GenerationError("cannot open fixture client map: " + path.string());
    std::string line;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.contains("prompt_sha256") ||
            !record.contains("completion"))
            throw GenerationError("malformed fixture client line");
        completions_[record["prompt_sha256"].get<std::string>()] =
            record["completion"].get<std::string>();
    }
}

std::string FixtureGenerationClient::generate(const std::string& prompt,
                                              const std::vector<std::string>&, std::size_t) {
    auto it = completions_.find(text::sha256_hex(prompt));
    if (it == completions_.end())
        throw GenerationError("fixture client has no completion for this prompt");
    return it->second;
}

HttpGenerationClient::HttpGenerationClient(std::string endpoint)
    : endpoint_(std::move(endpoint)) {}

std::string HttpGenerationClient::generate(const std::string& prompt,
                                           const std::vector<std::string>& stop,
                                           std::size_t max_length) {
    httplib::Client client(endpoint_);
    client.set_read_timeout(300, 0);
    httplib::Headers headers;
    if (const char* token = std::getenv("GEN_CLIENT_TOKEN"))
        headers.emplace("Authorization", std::string("Bearer ") + token);
    json body;
    body["prompt"] = prompt;
    body["stop"] = stop;
    body["max_length"] = max_length;
    auto res = client.Post("/generate", headers, body.dump(), "application/json");
    if (!res || res->status != 200)
        throw GenerationError("generation request failed: " +
                              (res ? "HTTP " + std::to_string(res->status)
                                   : httplib::to_string(res.error())));
    json payload = json::parse(res->body, nullptr, false);
    if (payload.is_discarded() || !payload.contains("completion"))
        throw GenerationError("generation response has no completion");
    return payload["completion"].get<std::string>();
}

// ---- predictions ----

const Prediction* Predictions::find(const std::string& id) const {
    for (const auto& p : items)
        if (p.id == id) return &p;
    return nullptr;
}

void Predictions::upsert(const std::string& id, std::string query) {
    for (auto& p : items) {
        if (p.id == id) {
            p.query = std::move(query);
            return;
        }
    }
    items.push_back({id, std::move(query)});
}

Predictions load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.good()) throw std::runtime_error("cannot open predictions file: " + path.string());
    Predictions out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.contains("id") || !record.contains("query"))
            throw std::runtime_error("predictions line " + std::to_string(line_no) +
                                     ": expected fields id and query");
        out.items.push_back(
            {record["id"].get<std::string>(), record["query"].get<std::string>()});
    }
    return out;
}

void save_predictions(const Predictions& predictions, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out.good()) throw std::runtime_error("cannot write predictions file: " + path.string());
    for (const auto& p : predictions.items) {
        json record;
        record["id"] = p.id;
        record["query"] = p.query;
        out << record.dump() << '\n';
    }
}

// ---- evaluation ----

EvalReport run_eval(const dataset::Corpus& corpus, dataset::Split split,
                    const Predictions& predictions, exec::Executor* executor, int jobs) {
    auto instances = corpus.split_instances(split);
    EvalReport report;
    report.rows.resize(instances.size());

    std::atomic<std::size_t> next{0};
    auto score_one = [&](std::size_t i) {
        const dataset::Instance& inst = *instances[i];
        EvalRow row;
        row.id = inst.id;
        const Prediction* pred = predictions.find(inst.id);
        std::string hyp = pred ? pred->query : "";
        row.prediction_missing = pred == nullptr;

        auto breakdown = metrics::oqs(oql::RawQuery{hyp, inst.id}, oql::RawQuery{inst.query, inst.id});
        row.chrf = breakdown.chrf;
        row.kvs = breakdown.kvs;
        row.trees = breakdown.trees;
        row.oqs = breakdown.oqs;
        row.em = metrics::em(hyp, inst.query);

        if (executor) {
            row.executed = true;
            auto ref_outcome = executor->execute(inst.query);
            auto hyp_outcome = executor->execute(hyp);
            row.status = hyp_outcome.status;
            if (!ref_outcome.ok()) {
                row.reference_failed = true;
            } else if (hyp_outcome.ok()) {
                row.ex = metrics::ex(hyp_outcome.elements, ref_outcome.elements);
                row.ex_soft = metrics::ex_soft(hyp_outcome.elements, ref_outcome.elements);
            } else {
                row.ex = false;
                row.ex_soft = metrics::Score{0.0};
            }
        }
        report.rows[i] = std::move(row);
    };

    jobs = std::max(1, jobs);
    if (jobs == 1) {
        for (std::size_t i = 0; i < instances.size(); ++i) score_one(i);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < instances.size();
                     i = next.fetch_add(1))
                    score_one(i);
            });
        }
        for (auto& t : pool) t.join();
    }

    EvalAggregates& agg = report.aggregates;
    agg.rows = report.rows.size();
    double chrf_sum = 0, kvs_sum = 0, trees_sum = 0, oqs_sum = 0, em_sum = 0;
    double ex_sum = 0, ex_soft_sum = 0;
    std::size_t ground_rows = 0;
    for (const EvalRow& row : report.rows) {
        chrf_sum += row.chrf.value;
        kvs_sum += row.kvs.value;
        trees_sum += row.trees.value;
        oqs_sum += row.oqs.value;
        em_sum += row.em ? 1.0 : 0.0;
        agg.missing_predictions += row.prediction_missing;
        if (row.executed) {
            ++agg.executed;
            if (row.status == exec::ExecutionStatus::SyntaxError) ++agg.errors;
            if (row.reference_failed) {
                ++agg.reference_failures;
            } else {
                ++ground_rows;
                ex_sum += row.ex ? 1.0 : 0.0;
                ex_soft_sum += row.ex_soft.value;
            }
        }
    }
    if (agg.rows > 0) {
        double n = static_cast<double>(agg.rows);
        agg.chrf = metrics::Score{chrf_sum / n};
        agg.kvs = metrics::Score{kvs_sum / n};
        agg.trees = metrics::Score{trees_sum / n};
        agg.oqs = metrics::Score{oqs_sum / n};
        agg.em_rate = em_sum / n;
    }
    if (ground_rows > 0) {
        agg.ex_rate = ex_sum / static_cast<double>(ground_rows);
        agg.ex_soft = metrics::Score{ex_soft_sum / static_cast<double>(ground_rows)};
    }
    return report;
}

std::string report_tsv(const EvalReport& report) {
    std::string out = "id\tchrf\tkvs\ttrees\toqs\tem\tstatus\tex\tex_soft\n";
    char buf[160];
    for (const EvalRow& row : report.rows) {
        const char* status = !row.executed ? "-"
                             : row.reference_failed ? "reference_failed"
                                                    : exec::execution_status_name(row.status);
        std::snprintf(buf, sizeof(buf), "%s\t%.6f\t%.6f\t%.6f\t%.6f\t%d\t%s\t%d\t%.6f\n",
                      row.id.c_str(), row.chrf.value, row.kvs.value, row.trees.value,
                      row.oqs.value, row.em ? 1 : 0, status,
                      row.ex ? 1 : 0, row.ex_soft.value);
        out += buf;
    }
    return out;
}

std::string report_table(const EvalReport& report) {
    const EvalAggregates& a = report.aggregates;
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-10s %6s %6s %6s %6s %6s", "instances", "chrF", "KVS",
                  "TreeS", "OQS", "EM");
    out << buf;
    if (a.executed > 0) {
        std::snprintf(buf, sizeof(buf), " %8s %6s %8s", "#Errors", "EX", "EX_soft");
        out << buf;
    }
    out << '\n';
    std::snprintf(buf, sizeof(buf), "%-10zu %6s %6s %6s %6s %6s", a.rows,
                  a.chrf.display().c_str(), a.kvs.display().c_str(), a.trees.display().c_str(),
                  a.oqs.display().c_str(), metrics::format_percent(a.em_rate).c_str());
    out << buf;
    if (a.executed > 0) {
        std::snprintf(buf, sizeof(buf), " %8zu %6s %8s", a.errors,
                      metrics::format_percent(a.ex_rate).c_str(), a.ex_soft.display().c_str());
        out << buf;
    }
    out << '\n';
    if (a.missing_predictions > 0)
        out << "missing predictions: " << a.missing_predictions << '\n';
    if (a.reference_failures > 0)
        out << "reference execution failures (excluded from EX): " << a.reference_failures
            << '\n';
    return out.str();
}

// ---- self-refinement ----

const char* refine_mode_name(RefineMode m) {
    switch (m) {
        case RefineMode::Off: return "off";
        case RefineMode::ErrorsOnly: return "errors_only";
        case RefineMode::All: return "all";
    }
    return "?";
}

std::optional<RefineMode> refine_mode_from_name(std::string_view name) {
    if (name == "off") return RefineMode::Off;
    if (name == "errors_only" || name == "errors-only") return RefineMode::ErrorsOnly;
    if (name == "all") return RefineMode::All;
    return std::nullopt;
}

RefineResult self_refine(const dataset::Corpus& corpus, dataset::Split split,
                         const Predictions& baseline, const RefinePolicy& policy,
                         GenerationClient* client, exec::Executor* executor,
                         const ShotStrategy& strategy, EmbeddingProvider* provider) {
    RefineResult result;
    result.predictions = baseline;
    if (policy.mode == RefineMode::Off) return result;
    if (!client) throw std::invalid_argument("self_refine needs a generation client");
    if (!executor) throw std::invalid_argument("self_refine needs an executor");

    auto train = corpus.split_instances(dataset::Split::Train);
    for (const auto* inst : corpus.split_instances(split)) {
        const Prediction* pred = baseline.find(inst->id);
        if (!pred || pred->query.empty()) continue;

        auto outcome = executor->execute(pred->query);
        bool is_error = outcome.status == exec::ExecutionStatus::SyntaxError;
        if (policy.mode == RefineMode::ErrorsOnly && !is_error) continue;

        RefineRecord record;
        record.id = inst->id;
        std::optional<std::string> feedback;
        if (policy.with_feedback)
            feedback = exec::feedback_from_outcome(outcome, policy.feedback_samples);

        try {
            std::vector<RefineShot> shots;
            for (const auto* s : select_shots(inst->nl, train, strategy, provider))
                shots.push_back({s->nl, s->query, s->query});
            std::string prompt = build_refine_prompt(inst->nl, pred->query, feedback, shots);
            std::string completion = clean_completion(
                client->generate(prompt, {std::string(kStopSequence)}, 2048));
            if (!completion.empty()) {
                result.predictions.upsert(inst->id, completion);
                record.refined = true;
            }
        } catch (const std::exception&) {
            record.client_failed = true;  // baseline is kept
        }
        result.records.push_back(record);
    }
    return result;
}

}  // namespace ovql::harness
