#include "overpassql.h"

#include "core/analysis.hpp"
#include "core/dataset.hpp"
#include "core/difficulty.hpp"
#include "core/executor.hpp"
#include "core/harness.hpp"
#include "core/metrics.hpp"
#include "core/parser.hpp"
#include "core/syntax_tree.hpp"

#include "json.hpp"

#include <cstring>
#include <memory>
#include <string>

using json = nlohmann::ordered_json;
namespace oql = ovql::oql;
namespace metrics = ovql::metrics;
namespace dataset = ovql::dataset;
namespace difficulty = ovql::difficulty;
namespace harness = ovql::harness;
namespace exec = ovql::exec;

#define OVQL_API __attribute__((visibility("default")))

struct ovql_query {
    oql::QueryAst ast;
};

struct ovql_corpus {
    dataset::Corpus corpus;
};

struct ovql_executor {
    std::unique_ptr<exec::Executor> executor;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) return nullptr;
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

int set_error(int code, const std::string& message) {
    g_last_error = message;
    return code;
}

// maps C++ failures onto error codes; parse/lex problems are OVQL_ERR_PARSE
template <typename Fn>
int guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        return fn();
    } catch (const oql::ParseError& e) {
        return set_error(OVQL_ERR_PARSE, e.describe());
    } catch (const oql::LexError& e) {
        return set_error(OVQL_ERR_PARSE, e.what());
    } catch (const dataset::LoadError& e) {
        return set_error(OVQL_ERR_IO, e.what());
    } catch (const harness::GenerationError& e) {
        return set_error(OVQL_ERR_EXEC, e.what());
    } catch (const exec::MacroError& e) {
        return set_error(OVQL_ERR_EXEC, e.what());
    } catch (const std::invalid_argument& e) {
        return set_error(OVQL_ERR_INVALID_ARG, e.what());
    } catch (const std::exception& e) {
        return set_error(OVQL_ERR_IO, e.what());
    } catch (...) {
        return set_error(OVQL_ERR_INTERNAL, "unknown error");
    }
}

std::unique_ptr<harness::EmbeddingProvider> make_provider(const char* spec,
                                                          const dataset::Corpus& corpus) {
    if (!spec || !*spec) return nullptr;
    std::string s(spec);
    if (s == "hash") return std::make_unique<harness::HashEmbeddingProvider>();
    if (s.rfind("hash:", 0) == 0)
        return std::make_unique<harness::HashEmbeddingProvider>(std::stoul(s.substr(5)));
    if (s.rfind("file:", 0) == 0)
        return std::make_unique<harness::FileEmbeddingProvider>(s.substr(5), corpus);
    if (s.rfind("http:", 0) == 0 || s.rfind("https:", 0) == 0)
        return std::make_unique<harness::HttpEmbeddingProvider>(s);
    throw std::invalid_argument("unknown provider spec: " + s);
}

std::unique_ptr<harness::GenerationClient> make_client(const char* spec) {
    if (!spec || !*spec) throw std::invalid_argument("client spec required");
    std::string s(spec);
    if (s.rfind("fixture:", 0) == 0)
        return std::make_unique<harness::FixtureGenerationClient>(s.substr(8));
    if (s.rfind("http:", 0) == 0 || s.rfind("https:", 0) == 0)
        return std::make_unique<harness::HttpGenerationClient>(s);
    throw std::invalid_argument("unknown client spec: " + s);
}

dataset::Split parse_split(const char* split) {
    auto s = dataset::split_from_name(split ? split : "");
    if (!s) throw std::invalid_argument(std::string("unknown split: ") + (split ? split : ""));
    return *s;
}

json stats_to_json(const dataset::StatsReport& r) {
    json j;
    j["total"] = r.total;
    j["train"] = r.train;
    j["dev"] = r.dev;
    j["test"] = r.test;
    j["parsed"] = r.parsed;
    j["distinct_input_words"] = r.distinct_input_words;
    j["mean_input_chars"] = r.mean_input_chars;
    j["mean_query_chars"] = r.mean_query_chars;
    j["mean_syntactic_units"] = r.mean_syntactic_units;
    j["distinct_templates"] = r.distinct_templates;
    j["unique_keys"] = r.unique_keys;
    j["unique_values"] = r.unique_values;
    j["unique_pairs"] = r.unique_pairs;
    json features = json::object();
    for (const auto& info : oql::feature_taxonomy()) {
        json f;
        f["display"] = info.display;
        f["group"] = info.group;
        f["count"] = r.feature_counts[static_cast<std::size_t>(info.id)];
        f["prevalence"] = r.feature_prevalence(info.id);
        features[info.key] = f;
    }
    j["features"] = features;
    json failures = json::array();
    for (const auto& f : r.failures) failures.push_back({{"id", f.id}, {"message", f.message}});
    j["failures"] = failures;
    return j;
}

json outcome_to_json(const exec::ExecutionOutcome& o) {
    json j;
    j["status"] = exec::execution_status_name(o.status);
    j["returned_count"] = o.returned_count;
    j["error_message"] = o.error_message;
    j["elapsed"] = o.elapsed;
    j["from_cache"] = o.from_cache;
    j["warnings"] = o.warnings;
    j["samples"] = o.samples;
    json elements = json::array();
    for (const auto& e : o.elements) {
        json el;
        el["kind"] = metrics::osm_kind_name(e.kind);
        if (e.kind == metrics::OsmKind::Derived)
            el["hash"] = e.content_hash;
        else
            el["id"] = e.id;
        elements.push_back(el);
    }
    j["elements"] = elements;
    return j;
}

}  // namespace

extern "C" {

OVQL_API const char* ovql_version(void) { return "0.1.0"; }

OVQL_API const char* ovql_last_error(void) { return g_last_error.c_str(); }

OVQL_API void ovql_string_free(char* s) { std::free(s); }

// ---- parsing ----

OVQL_API int ovql_query_parse(const char* text, ovql_query** out_query) {
    if (!text || !out_query) return set_error(OVQL_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        auto handle = std::make_unique<ovql_query>();
        handle->ast = oql::parse(text);
        *out_query = handle.release();
        return OVQL_OK;
    });
}

OVQL_API void ovql_query_free(ovql_query* query) { delete query; }

OVQL_API char* ovql_query_serialize(const ovql_query* query) {
    if (!query) return nullptr;
    return dup_string(oql::serialize(query->ast));
}

OVQL_API char* ovql_query_tree(const ovql_query* query) {
    if (!query) return nullptr;
    return dup_string(oql::render_tree(oql::to_syntax_tree(query->ast)));
}

OVQL_API long long ovql_query_unit_count(const ovql_query* query) {
    if (!query) return -1;
    return static_cast<long long>(oql::count_syntactic_units(query->ast));
}

OVQL_API char* ovql_query_template(const ovql_query* query) {
    if (!query) return nullptr;
    return dup_string(oql::normalize_template(query->ast));
}

OVQL_API char* ovql_query_features_json(const ovql_query* query) {
    if (!query) return nullptr;
    json names = json::array();
    for (oql::Feature f : oql::detect_features(query->ast).to_list())
        names.push_back(oql::feature_info(f).key);
    json j;
    j["features"] = names;
    return dup_string(j.dump());
}

OVQL_API char* ovql_query_kv_json(const ovql_query* query) {
    if (!query) return nullptr;
    oql::KvSet kv = oql::extract_kv(query->ast);
    json j;
    json pairs = json::array();
    for (const auto& [k, v] : kv.pairs) pairs.push_back(json::array({k, v}));
    j["pairs"] = pairs;
    j["keys"] = kv.keys;
    j["values"] = kv.values;
    return dup_string(j.dump());
}

OVQL_API char* ovql_comments_json(const char* text) {
    if (!text) return nullptr;
    try {
        json arr = json::array();
        for (const auto& [comment, stripped] : oql::extract_comments(text))
            arr.push_back({{"comment", comment}, {"stripped_query", stripped}});
        return dup_string(arr.dump());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return nullptr;
    }
}

// ---- metrics ----

OVQL_API double ovql_chrf(const char* hyp, const char* ref) {
    if (!hyp || !ref) return -1.0;
    return metrics::chrf(hyp, ref).value;
}

OVQL_API double ovql_bleu(const char* hyp, const char* ref) {
    if (!hyp || !ref) return -1.0;
    return metrics::bleu(hyp, ref).value;
}

OVQL_API int ovql_em(const char* hyp, const char* ref) {
    if (!hyp || !ref) return 0;
    return metrics::em(hyp, ref) ? 1 : 0;
}

OVQL_API int ovql_score_pair(const char* hyp, const char* ref, char** out_json) {
    if (!hyp || !ref || !out_json) return set_error(OVQL_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        auto b = metrics::oqs(oql::RawQuery{hyp, ""}, oql::RawQuery{ref, ""});
        json j;
        j["chrf"] = b.chrf.value;
        j["kvs"] = b.kvs.value;
        j["trees"] = b.trees.value;
        j["oqs"] = b.oqs.value;
        j["hyp_parsed"] = b.hyp_parsed;
        j["kvs_both_empty"] = b.kvs_both_empty;
        *out_json = dup_string(j.dump());
        return OVQL_OK;
    });
}

// ---- corpus ----

OVQL_API int ovql_corpus_load(const char* path, ovql_corpus** out_corpus) {
    if (!path || !out_corpus) return set_error(OVQL_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        auto handle = std::make_unique<ovql_corpus>();
        handle->corpus = dataset::load(path);
        *out_corpus = handle.release();
        return OVQL_OK;
    });
}

OVQL_API void ovql_corpus_free(ovql_corpus* corpus) { delete corpus; }

OVQL_API long long ovql_corpus_size(const ovql_corpus* corpus) {
    return corpus ? static_cast<long long>(corpus->corpus.instances.size()) : -1;
}

OVQL_API char* ovql_corpus_stats_text(const ovql_corpus* corpus) {
    if (!corpus) return nullptr;
    return dup_string(dataset::render_stats(dataset::stats(corpus->corpus)));
}

OVQL_API char* ovql_corpus_stats_json(const ovql_corpus* corpus) {
    if (!corpus) return nullptr;
    return dup_string(stats_to_json(dataset::stats(corpus->corpus)).dump(2));
}

OVQL_API char* ovql_corpus_validate_json(const ovql_corpus* corpus) {
    if (!corpus) return nullptr;
    json arr = json::array();
    for (const auto& v : dataset::validate_splits(corpus->corpus))
        arr.push_back({{"train_id", v.train_id}, {"eval_id", v.eval_id}, {"side", v.side}});
    return dup_string(arr.dump());
}

OVQL_API char* ovql_corpus_comment_instances_jsonl(const ovql_corpus* corpus) {
    if (!corpus) return nullptr;
    std::string out;
    for (const auto& inst : dataset::comment_instances(corpus->corpus)) {
        json record;
        record["id"] = inst.id;
        record["nl"] = inst.nl;
        record["query"] = inst.query;
        record["split"] = dataset::split_name(inst.split);
        record["synthetic"] = true;
        out += record.dump();
        out += '\n';
    }
    return dup_string(out);
}

OVQL_API int ovql_corpus_key_coverage(const ovql_corpus* corpus, const char* key_usage_tsv_path,
                                      double* out_coverage) {
    if (!corpus || !key_usage_tsv_path || !out_coverage)
        return set_error(OVQL_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        auto table = dataset::load_key_usage(key_usage_tsv_path);
        *out_coverage = dataset::key_coverage(corpus->corpus, table);
        return OVQL_OK;
    });
}

OVQL_API int ovql_corpus_partition_tsv(const ovql_corpus* corpus, const char* split,
                                       const char* criterion, const char* provider_spec,
                                       int jobs, char** out_tsv) {
    if (!corpus || !out_tsv) return set_error(OVQL_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        auto crit = difficulty::criterion_from_name(criterion ? criterion : "");
        if (!crit)
            throw std::invalid_argument(std::string("unknown criterion: ") +
                                        (criterion ? criterion : ""));
        auto provider = make_provider(provider_spec, corpus->corpus);
        auto part = difficulty::partition(corpus->corpus, parse_split(split), *crit,
                                          provider.get(), jobs);
        *out_tsv = dup_string(difficulty::partition_tsv(part, *crit));
        return OVQL_OK;
    });
}

// ---- execution ----

OVQL_API int ovql_executor_new(const char* config_json, ovql_executor** out_executor) {
    if (!config_json || !out_executor) return set_error(OVQL_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        json cfg_doc = json::parse(config_json, nullptr, false);
        if (cfg_doc.is_discarded()) throw std::invalid_argument("config is not valid JSON");
        exec::ExecutionConfig cfg;
        cfg.endpoint_url = cfg_doc.value("endpoint", cfg.endpoint_url);
        cfg.request_timeout = cfg_doc.value("request_timeout", cfg.request_timeout);
        if (cfg_doc.contains("bbox")) {
            auto b = cfg_doc["bbox"];
            if (!b.is_array() || b.size() != 4)
                throw std::invalid_argument("bbox must be [south,west,north,east]");
            cfg.default_bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                                b[3].get<double>()};
        }
        cfg.max_inflight = cfg_doc.value("max_inflight", cfg.max_inflight);
        cfg.retry.max_attempts = cfg_doc.value("retry_attempts", cfg.retry.max_attempts);
        cfg.retry.backoff_seconds = cfg_doc.value("retry_backoff", cfg.retry.backoff_seconds);
        if (cfg_doc.contains("cache_dir"))
            cfg.cache_dir = cfg_doc["cache_dir"].get<std::string>();

        std::shared_ptr<exec::GeocodeResolver> resolver;
        if (cfg_doc.contains("geocodes_tsv"))
            resolver = std::make_shared<exec::FixtureGeocodeResolver>(
                cfg_doc["geocodes_tsv"].get<std::string>());
        else if (cfg_doc.contains("nominatim_url"))
            resolver = std::make_shared<exec::HttpGeocodeResolver>(
                cfg_doc["nominatim_url"].get<std::string>());

        auto handle = std::make_unique<ovql_executor>();
        handle->executor = std::make_unique<exec::Executor>(cfg, resolver);
        *out_executor = handle.release();
        return OVQL_OK;
    });
}

OVQL_API void ovql_executor_free(ovql_executor* executor) { delete executor; }

OVQL_API int ovql_expand_macros(ovql_executor* executor, const char* query, char** out_text) {
    if (!executor || !query || !out_text)
        return set_error(OVQL_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        *out_text = dup_string(executor->executor->expand(query));
        return OVQL_OK;
    });
}

OVQL_API int ovql_execute(ovql_executor* executor, const char* query, char** out_json) {
    if (!executor || !query || !out_json)
        return set_error(OVQL_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        *out_json = dup_string(outcome_to_json(executor->executor->execute(query)).dump(2));
        return OVQL_OK;
    });
}

OVQL_API int ovql_feedback(ovql_executor* executor, const char* query, int sample_size,
                           char** out_text) {
    if (!executor || !query || !out_text)
        return set_error(OVQL_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        auto outcome = executor->executor->execute(query);
        *out_text = dup_string(exec::feedback_from_outcome(outcome, sample_size));
        return OVQL_OK;
    });
}

// ---- prompting & evaluation ----

OVQL_API int ovql_select_shots(const ovql_corpus* corpus, const char* input,
                               const char* strategy, int k, unsigned long long seed,
                               const char* provider_spec, char** out_json) {
    if (!corpus || !input || !out_json) return set_error(OVQL_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        auto mode = harness::shot_mode_from_name(strategy ? strategy : "");
        if (!mode)
            throw std::invalid_argument(std::string("unknown strategy: ") +
                                        (strategy ? strategy : ""));
        harness::ShotStrategy s{*mode, k, seed};
        auto provider = make_provider(provider_spec, corpus->corpus);
        auto train = corpus->corpus.split_instances(dataset::Split::Train);
        json arr = json::array();
        for (const auto* shot : harness::select_shots(input, train, s, provider.get()))
            arr.push_back({{"id", shot->id}, {"nl", shot->nl}, {"query", shot->query}});
        *out_json = dup_string(arr.dump());
        return OVQL_OK;
    });
}

OVQL_API int ovql_build_prompt(const char* shots_json, const char* input, char** out_prompt) {
    if (!shots_json || !input || !out_prompt)
        return set_error(OVQL_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        json arr = json::parse(shots_json, nullptr, false);
        if (arr.is_discarded() || !arr.is_array())
            throw std::invalid_argument("shots must be a JSON array");
        std::vector<dataset::Instance> shots;
        for (const auto& s : arr) {
            dataset::Instance inst;
            inst.nl = s.at("nl").get<std::string>();
            inst.query = s.at("query").get<std::string>();
            shots.push_back(std::move(inst));
        }
        std::vector<const dataset::Instance*> refs;
        for (const auto& s : shots) refs.push_back(&s);
        *out_prompt = dup_string(harness::build_prompt(refs, input));
        return OVQL_OK;
    });
}

OVQL_API int ovql_build_refine_prompt(const char* input, const char* hypothesis,
                                      const char* feedback, const char* shots_json,
                                      char** out_prompt) {
    if (!input || !hypothesis || !shots_json || !out_prompt)
        return set_error(OVQL_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        json arr = json::parse(shots_json, nullptr, false);
        if (arr.is_discarded() || !arr.is_array())
            throw std::invalid_argument("shots must be a JSON array");
        std::vector<harness::RefineShot> shots;
        for (const auto& s : arr) {
            shots.push_back({s.at("input").get<std::string>(),
                             s.at("hypothesis").get<std::string>(),
                             s.at("improved").get<std::string>()});
        }
        std::optional<std::string> fb;
        if (feedback) fb = std::string(feedback);
        *out_prompt = dup_string(harness::build_refine_prompt(input, hypothesis, fb, shots));
        return OVQL_OK;
    });
}

OVQL_API int ovql_run_eval(const ovql_corpus* corpus, const char* split,
                           const char* predictions_path, ovql_executor* executor, int jobs,
                           char** out_tsv, char** out_table) {
    if (!corpus || !predictions_path || !out_tsv || !out_table)
        return set_error(OVQL_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        auto predictions = harness::load_predictions(predictions_path);
        auto report = harness::run_eval(corpus->corpus, parse_split(split), predictions,
                                        executor ? executor->executor.get() : nullptr, jobs);
        *out_tsv = dup_string(harness::report_tsv(report));
        *out_table = dup_string(harness::report_table(report));
        return OVQL_OK;
    });
}

OVQL_API int ovql_self_refine(const ovql_corpus* corpus, const char* split,
                              const char* predictions_path, const char* policy_json,
                              const char* client_spec, ovql_executor* executor,
                              const char* strategy_json, const char* provider_spec,
                              char** out_predictions_jsonl, char** out_records_json) {
    if (!corpus || !predictions_path || !policy_json || !out_predictions_jsonl ||
        !out_records_json)
        return set_error(OVQL_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        json policy_doc = json::parse(policy_json, nullptr, false);
        if (policy_doc.is_discarded()) throw std::invalid_argument("policy is not valid JSON");
        harness::RefinePolicy policy;
        auto mode = harness::refine_mode_from_name(policy_doc.value("mode", "off"));
        if (!mode) throw std::invalid_argument("unknown refine mode");
        policy.mode = *mode;
        policy.with_feedback = policy_doc.value("with_feedback", true);
        policy.feedback_samples = policy_doc.value("feedback_samples", 1);

        harness::ShotStrategy strategy;
        if (strategy_json && *strategy_json) {
            json sj = json::parse(strategy_json, nullptr, false);
            if (sj.is_discarded()) throw std::invalid_argument("strategy is not valid JSON");
            auto smode = harness::shot_mode_from_name(sj.value("mode", "retrieval_bleu"));
            if (!smode) throw std::invalid_argument("unknown shot strategy");
            strategy.mode = *smode;
            strategy.k = sj.value("k", 5);
            strategy.seed = sj.value("seed", std::uint64_t{0});
        }

        auto baseline = harness::load_predictions(predictions_path);
        std::unique_ptr<harness::GenerationClient> client;
        if (policy.mode != harness::RefineMode::Off) client = make_client(client_spec);
        auto provider = make_provider(provider_spec, corpus->corpus);

        auto result = harness::self_refine(
            corpus->corpus, parse_split(split), baseline, policy, client.get(),
            executor ? executor->executor.get() : nullptr, strategy, provider.get());

        std::string jsonl;
        for (const auto& p : result.predictions.items) {
            json record;
            record["id"] = p.id;
            record["query"] = p.query;
            jsonl += record.dump();
            jsonl += '\n';
        }
        json records = json::array();
        for (const auto& r : result.records)
            records.push_back({{"id", r.id},
                               {"refined", r.refined},
                               {"client_failed", r.client_failed}});
        *out_predictions_jsonl = dup_string(jsonl);
        *out_records_json = dup_string(records.dump());
        return OVQL_OK;
    });
}

}  // extern "C"
