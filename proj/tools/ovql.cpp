// ovql - command line front end for the OverpassQL toolkit.
// All functionality goes through the C interface in overpassql.h.

#include "overpassql.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;  // parse or evaluation failure
constexpr int kExitUsage = 2;   // bad flags, missing files, config errors

struct OwnedString {
    char* s = nullptr;
    ~OwnedString() { ovql_string_free(s); }
    std::string str() const { return s ? s : ""; }
};

int code_to_exit(int code) {
    switch (code) {
        case OVQL_OK: return kExitOk;
        case OVQL_ERR_PARSE:
        case OVQL_ERR_EXEC: return kExitDomain;
        default: return kExitUsage;
    }
}

int report_failure(int code) {
    std::cerr << "error: " << ovql_last_error() << "\n";
    return code_to_exit(code);
}

// query text from a file or stdin, outer whitespace trimmed
std::string read_input(const std::string& path) {
    std::stringstream buf;
    if (path.empty() || path == "-") {
        buf << std::cin.rdbuf();
    } else {
        std::ifstream in(path, std::ios::binary);
        if (!in.good()) throw CLI::ValidationError("cannot open input file: " + path);
        buf << in.rdbuf();
    }
    std::string text = buf.str();
    auto begin = text.find_first_not_of(" \t\r\n\f\v");
    if (begin == std::string::npos) return "";
    auto end = text.find_last_not_of(" \t\r\n\f\v");
    return text.substr(begin, end - begin + 1);
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

struct CorpusGuard {
    ovql_corpus* handle = nullptr;
    ~CorpusGuard() { ovql_corpus_free(handle); }
};

struct ExecutorGuard {
    ovql_executor* handle = nullptr;
    ~ExecutorGuard() { ovql_executor_free(handle); }
};

// shared executor flags; endpoint resolution order is flag, config file,
// then the OVERPASS_ENDPOINT environment variable
struct ExecOptions {
    std::string endpoint;
    std::string bbox;
    std::string geocodes;
    std::string nominatim;
    std::string cache_dir;
    double timeout = 180.0;
    int max_inflight = 2;
    int retry_attempts = 3;
    double retry_backoff = 1.0;

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--endpoint", endpoint, "Overpass API base URL");
        cmd->add_option("--bbox", bbox, "default bbox as south,west,north,east");
        cmd->add_option("--geocodes", geocodes, "geocode fixture TSV (name, kind, id, lat, lon)");
        cmd->add_option("--nominatim", nominatim, "Nominatim-style geocoder base URL");
        cmd->add_option("--cache-dir", cache_dir, "directory for cached execution outcomes");
        cmd->add_option("--timeout", timeout, "request timeout in seconds");
        cmd->add_option("--max-inflight", max_inflight, "bound on concurrent requests");
        cmd->add_option("--retry-attempts", retry_attempts, "attempts per request");
        cmd->add_option("--retry-backoff", retry_backoff, "base backoff in seconds");
    }

    std::string config_json() const {
        std::string endpoint_final = endpoint;
        if (endpoint_final.empty()) {
            if (const char* env = std::getenv("OVERPASS_ENDPOINT")) endpoint_final = env;
        }
        if (endpoint_final.empty())
            throw CLI::ValidationError(
                "no endpoint: pass --endpoint or set OVERPASS_ENDPOINT");
        std::ostringstream out;
        out << "{\"endpoint\": \"" << endpoint_final << "\"";
        out << ", \"request_timeout\": " << timeout;
        out << ", \"max_inflight\": " << max_inflight;
        out << ", \"retry_attempts\": " << retry_attempts;
        out << ", \"retry_backoff\": " << retry_backoff;
        if (!bbox.empty()) {
            double s, w, n, e;
            if (std::sscanf(bbox.c_str(), "%lf,%lf,%lf,%lf", &s, &w, &n, &e) != 4)
                throw CLI::ValidationError("--bbox expects south,west,north,east");
            out << ", \"bbox\": [" << s << ", " << w << ", " << n << ", " << e << "]";
        }
        auto quote = [](const std::string& v) {
            std::string out = "\"";
            for (char c : v) {
                if (c == '"' || c == '\\') out.push_back('\\');
                out.push_back(c);
            }
            return out + "\"";
        };
        if (!geocodes.empty()) out << ", \"geocodes_tsv\": " << quote(geocodes);
        if (!nominatim.empty()) out << ", \"nominatim_url\": " << quote(nominatim);
        if (!cache_dir.empty()) out << ", \"cache_dir\": " << quote(cache_dir);
        out << "}";
        return out.str();
    }

    int make(ExecutorGuard& guard) const {
        return ovql_executor_new(config_json().c_str(), &guard.handle);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"OverpassQL parsing, similarity metrics and grounded evaluation"};
    app.require_subcommand(1);
    app.set_config("--config", "", "configuration file (INI); flags override file values");
    app.set_version_flag("--version", []() { return std::string(ovql_version()); });

    // ---- parse ----
    auto* cmd_parse = app.add_subcommand("parse", "parse a query and print its syntax tree");
    std::string parse_file;
    bool parse_units = false, parse_template = false, parse_features = false, parse_kv = false,
         parse_serialize = false;
    cmd_parse->add_option("file", parse_file, "query file, or - for stdin");
    cmd_parse->add_flag("--units", parse_units, "print the syntactic unit count");
    cmd_parse->add_flag("--template", parse_template, "print the normalized template");
    cmd_parse->add_flag("--features", parse_features, "print detected syntax features");
    cmd_parse->add_flag("--kv", parse_kv, "print the key-value inventory");
    cmd_parse->add_flag("--serialize", parse_serialize, "print the canonical serialization");

    // ---- stats ----
    auto* cmd_stats = app.add_subcommand("stats", "corpus statistics report");
    std::string stats_corpus, stats_key_usage;
    bool stats_json = false;
    cmd_stats->add_option("--corpus", stats_corpus, "corpus JSONL")->required();
    cmd_stats->add_option("--key-usage", stats_key_usage,
                          "key usage TSV for coverage (key<TAB>count)");
    cmd_stats->add_flag("--json", stats_json, "emit JSON instead of text");

    // ---- score ----
    auto* cmd_score = app.add_subcommand("score", "similarity breakdown for a query pair");
    std::string score_hyp, score_ref;
    bool score_literal = false;
    cmd_score->add_option("hyp", score_hyp, "hypothesis query file")->required();
    cmd_score->add_option("ref", score_ref, "reference query file")->required();
    cmd_score->add_flag("--literal", score_literal, "arguments are query text, not files");

    // ---- evaluate ----
    auto* cmd_eval = app.add_subcommand("evaluate", "score predictions against a corpus split");
    std::string eval_corpus, eval_predictions, eval_split = "dev", eval_out_dir;
    bool eval_execute = false;
    int eval_jobs = 1;
    ExecOptions eval_exec;
    cmd_eval->add_option("--corpus", eval_corpus, "corpus JSONL")->required();
    cmd_eval->add_option("--predictions", eval_predictions, "predictions JSONL")->required();
    cmd_eval->add_option("--split", eval_split, "split to evaluate (train/dev/test)");
    cmd_eval->add_option("--out-dir", eval_out_dir, "directory for report files");
    cmd_eval->add_option("--jobs", eval_jobs, "worker parallelism");
    cmd_eval->add_flag("--execute", eval_execute, "ground the evaluation by executing queries");
    eval_exec.add_flags(cmd_eval);

    // ---- partition ----
    auto* cmd_partition = app.add_subcommand("partition", "difficulty partition of a split");
    std::string part_corpus, part_split = "test", part_criterion, part_provider, part_out_dir;
    int part_jobs = 0;
    cmd_partition->add_option("--corpus", part_corpus, "corpus JSONL")->required();
    cmd_partition->add_option("--split", part_split, "split to partition");
    cmd_partition
        ->add_option("--criterion", part_criterion,
                     "input_length | query_length | syntactic_units | max_input_similarity | "
                     "max_query_oqs")
        ->required();
    cmd_partition->add_option("--provider", part_provider,
                              "embedding provider: hash[:dim] or file:<path>");
    cmd_partition->add_option("--out-dir", part_out_dir, "directory for the partition TSV");
    cmd_partition->add_option("--jobs", part_jobs, "worker parallelism (0 = auto)");

    // ---- prompt ----
    auto* cmd_prompt = app.add_subcommand("prompt", "build a few-shot prompt for an input");
    std::string prompt_corpus, prompt_input, prompt_strategy = "retrieval_bleu", prompt_provider;
    int prompt_k = 5;
    unsigned long long prompt_seed = 0;
    cmd_prompt->add_option("--corpus", prompt_corpus, "corpus JSONL (train split is used)")
        ->required();
    cmd_prompt->add_option("--input", prompt_input, "natural language input")->required();
    cmd_prompt->add_option("--strategy", prompt_strategy,
                           "random | retrieval_bleu | retrieval_embedding");
    cmd_prompt->add_option("--k", prompt_k, "number of in-context examples");
    cmd_prompt->add_option("--seed", prompt_seed, "seed for the random strategy");
    cmd_prompt->add_option("--provider", prompt_provider, "embedding provider spec");

    // ---- refine ----
    auto* cmd_refine = app.add_subcommand("refine", "one self-refinement round over predictions");
    std::string refine_corpus, refine_predictions, refine_split = "dev";
    std::string refine_mode = "errors_only", refine_client, refine_provider;
    std::string refine_strategy = "retrieval_bleu", refine_out_dir;
    bool refine_feedback = true;
    int refine_k = 5, refine_samples = 1;
    unsigned long long refine_seed = 0;
    ExecOptions refine_exec;
    cmd_refine->add_option("--corpus", refine_corpus, "corpus JSONL")->required();
    cmd_refine->add_option("--predictions", refine_predictions, "baseline predictions JSONL")
        ->required();
    cmd_refine->add_option("--split", refine_split, "split the predictions belong to");
    cmd_refine->add_option("--refine-mode", refine_mode, "off | errors_only | all");
    cmd_refine->add_flag("--with-feedback,!--no-feedback", refine_feedback,
                         "append execution feedback to the refine prompt");
    cmd_refine->add_option("--feedback-samples", refine_samples,
                           "returned elements quoted as feedback");
    cmd_refine->add_option("--client", refine_client,
                           "generation client: fixture:<map.jsonl> or http(s) URL");
    cmd_refine->add_option("--strategy", refine_strategy, "shot strategy for refine prompts");
    cmd_refine->add_option("--k", refine_k, "shots per refine prompt");
    cmd_refine->add_option("--seed", refine_seed, "seed for the random strategy");
    cmd_refine->add_option("--provider", refine_provider, "embedding provider spec");
    cmd_refine->add_option("--out-dir", refine_out_dir, "directory for refined predictions");
    refine_exec.add_flags(cmd_refine);

    // ---- execute ----
    auto* cmd_execute = app.add_subcommand("execute", "run a query against an Overpass endpoint");
    std::string execute_file;
    bool execute_expand_only = false;
    int execute_feedback = 0;
    ExecOptions execute_exec;
    cmd_execute->add_option("file", execute_file, "query file, or - for stdin");
    cmd_execute->add_flag("--expand-only", execute_expand_only,
                          "print the macro-expanded query and stop");
    cmd_execute->add_option("--feedback", execute_feedback,
                            "also print refinement feedback with this many samples");
    execute_exec.add_flags(cmd_execute);

    // ---- augment ----
    auto* cmd_augment =
        app.add_subcommand("augment", "emit comment-derived training instances as JSONL");
    std::string augment_corpus;
    cmd_augment->add_option("--corpus", augment_corpus, "corpus JSONL")->required();

    // ---- validate ----
    auto* cmd_validate =
        app.add_subcommand("validate", "check train/eval splits for near-duplicates");
    std::string validate_corpus;
    cmd_validate->add_option("--corpus", validate_corpus, "corpus JSONL")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (cmd_parse->parsed()) {
            std::string text = read_input(parse_file);
            ovql_query* query = nullptr;
            int code = ovql_query_parse(text.c_str(), &query);
            if (code != OVQL_OK) return report_failure(code);
            bool any_flag =
                parse_units || parse_template || parse_features || parse_kv || parse_serialize;
            if (!any_flag || parse_units) {
                OwnedString tree{ovql_query_tree(query)};
                if (!any_flag) std::cout << tree.str();
                if (parse_units)
                    std::cout << "units\t" << ovql_query_unit_count(query) << "\n";
            }
            if (parse_template) {
                OwnedString tpl{ovql_query_template(query)};
                std::cout << tpl.str() << "\n";
            }
            if (parse_features) {
                OwnedString features{ovql_query_features_json(query)};
                std::cout << features.str() << "\n";
            }
            if (parse_kv) {
                OwnedString kv{ovql_query_kv_json(query)};
                std::cout << kv.str() << "\n";
            }
            if (parse_serialize) {
                OwnedString s{ovql_query_serialize(query)};
                std::cout << s.str() << "\n";
            }
            ovql_query_free(query);
            return kExitOk;
        }

        if (cmd_stats->parsed()) {
            CorpusGuard corpus;
            int code = ovql_corpus_load(stats_corpus.c_str(), &corpus.handle);
            if (code != OVQL_OK) return report_failure(code);
            OwnedString report{stats_json ? ovql_corpus_stats_json(corpus.handle)
                                          : ovql_corpus_stats_text(corpus.handle)};
            std::cout << report.str();
            if (!stats_json) std::cout << "\n";
            if (!stats_key_usage.empty()) {
                double coverage = 0.0;
                code = ovql_corpus_key_coverage(corpus.handle, stats_key_usage.c_str(),
                                                &coverage);
                if (code != OVQL_OK) return report_failure(code);
                std::printf("key usage coverage        %.4f\n", coverage);
            }
            return kExitOk;
        }

        if (cmd_score->parsed()) {
            std::string hyp = score_literal ? score_hyp : read_input(score_hyp);
            std::string ref = score_literal ? score_ref : read_input(score_ref);
            OwnedString breakdown;
            int code = ovql_score_pair(hyp.c_str(), ref.c_str(), &breakdown.s);
            if (code != OVQL_OK) return report_failure(code);
            auto b = nlohmann::json::parse(breakdown.str());
            std::printf("chrf\t%.1f\nkvs\t%.1f\ntrees\t%.1f\noqs\t%.1f\n",
                        100 * b["chrf"].get<double>(), 100 * b["kvs"].get<double>(),
                        100 * b["trees"].get<double>(), 100 * b["oqs"].get<double>());
            if (!b["hyp_parsed"].get<bool>())
                std::cerr << "warning: hypothesis does not parse; kvs and trees are zero\n";
            if (b.value("kvs_both_empty", false))
                std::cerr << "note: both queries carry no tags; kvs is 1.0 by convention\n";
            return kExitOk;
        }

        if (cmd_eval->parsed()) {
            CorpusGuard corpus;
            int code = ovql_corpus_load(eval_corpus.c_str(), &corpus.handle);
            if (code != OVQL_OK) return report_failure(code);
            ExecutorGuard executor;
            if (eval_execute) {
                code = eval_exec.make(executor);
                if (code != OVQL_OK) return report_failure(code);
            }
            OwnedString tsv, table;
            code = ovql_run_eval(corpus.handle, eval_split.c_str(), eval_predictions.c_str(),
                                 executor.handle, eval_jobs, &tsv.s, &table.s);
            if (code != OVQL_OK) return report_failure(code);
            std::cout << table.str();
            if (!eval_out_dir.empty()) {
                std::filesystem::create_directories(eval_out_dir);
                write_atomic(std::filesystem::path(eval_out_dir) / "report.tsv", tsv.str());
                write_atomic(std::filesystem::path(eval_out_dir) / "report.txt", table.str());
            }
            return kExitOk;
        }

        if (cmd_partition->parsed()) {
            CorpusGuard corpus;
            int code = ovql_corpus_load(part_corpus.c_str(), &corpus.handle);
            if (code != OVQL_OK) return report_failure(code);
            OwnedString tsv;
            code = ovql_corpus_partition_tsv(corpus.handle, part_split.c_str(),
                                             part_criterion.c_str(),
                                             part_provider.empty() ? nullptr
                                                                   : part_provider.c_str(),
                                             part_jobs, &tsv.s);
            if (code != OVQL_OK) return report_failure(code);
            if (part_out_dir.empty()) {
                std::cout << tsv.str();
            } else {
                std::filesystem::create_directories(part_out_dir);
                write_atomic(std::filesystem::path(part_out_dir) /
                                 ("partition_" + part_criterion + ".tsv"),
                             tsv.str());
            }
            return kExitOk;
        }

        if (cmd_prompt->parsed()) {
            CorpusGuard corpus;
            int code = ovql_corpus_load(prompt_corpus.c_str(), &corpus.handle);
            if (code != OVQL_OK) return report_failure(code);
            OwnedString shots;
            code = ovql_select_shots(corpus.handle, prompt_input.c_str(),
                                     prompt_strategy.c_str(), prompt_k, prompt_seed,
                                     prompt_provider.empty() ? nullptr : prompt_provider.c_str(),
                                     &shots.s);
            if (code != OVQL_OK) return report_failure(code);
            OwnedString prompt;
            code = ovql_build_prompt(shots.s, prompt_input.c_str(), &prompt.s);
            if (code != OVQL_OK) return report_failure(code);
            std::cout << prompt.str();
            return kExitOk;
        }

        if (cmd_refine->parsed()) {
            CorpusGuard corpus;
            int code = ovql_corpus_load(refine_corpus.c_str(), &corpus.handle);
            if (code != OVQL_OK) return report_failure(code);
            ExecutorGuard executor;
            if (refine_mode != "off") {
                code = refine_exec.make(executor);
                if (code != OVQL_OK) return report_failure(code);
            }
            std::string policy = std::string("{\"mode\": \"") + refine_mode +
                                 "\", \"with_feedback\": " +
                                 (refine_feedback ? "true" : "false") +
                                 ", \"feedback_samples\": " + std::to_string(refine_samples) +
                                 "}";
            std::string strategy = std::string("{\"mode\": \"") + refine_strategy +
                                   "\", \"k\": " + std::to_string(refine_k) +
                                   ", \"seed\": " + std::to_string(refine_seed) + "}";
            OwnedString refined, records;
            code = ovql_self_refine(corpus.handle, refine_split.c_str(),
                                    refine_predictions.c_str(), policy.c_str(),
                                    refine_client.empty() ? nullptr : refine_client.c_str(),
                                    executor.handle, strategy.c_str(),
                                    refine_provider.empty() ? nullptr : refine_provider.c_str(),
                                    &refined.s, &records.s);
            if (code != OVQL_OK) return report_failure(code);
            if (refine_out_dir.empty()) {
                std::cout << refined.str();
            } else {
                std::filesystem::create_directories(refine_out_dir);
                write_atomic(std::filesystem::path(refine_out_dir) / "predictions_refined.jsonl",
                             refined.str());
                write_atomic(std::filesystem::path(refine_out_dir) / "refine_records.json",
                             records.str());
            }
            std::cerr << "records: " << records.str() << "\n";
            return kExitOk;
        }

        if (cmd_execute->parsed()) {
            std::string query = read_input(execute_file);
            ExecutorGuard executor;
            int code = execute_exec.make(executor);
            if (code != OVQL_OK) return report_failure(code);
            if (execute_expand_only) {
                OwnedString expanded;
                code = ovql_expand_macros(executor.handle, query.c_str(), &expanded.s);
                if (code != OVQL_OK) return report_failure(code);
                std::cout << expanded.str() << "\n";
                return kExitOk;
            }
            OwnedString outcome;
            code = ovql_execute(executor.handle, query.c_str(), &outcome.s);
            if (code != OVQL_OK) return report_failure(code);
            std::cout << outcome.str() << "\n";
            if (execute_feedback > 0) {
                OwnedString feedback;
                code = ovql_feedback(executor.handle, query.c_str(), execute_feedback,
                                     &feedback.s);
                if (code != OVQL_OK) return report_failure(code);
                std::cout << "feedback:\n" << feedback.str() << "\n";
            }
            return kExitOk;
        }

        if (cmd_augment->parsed()) {
            CorpusGuard corpus;
            int code = ovql_corpus_load(augment_corpus.c_str(), &corpus.handle);
            if (code != OVQL_OK) return report_failure(code);
            OwnedString jsonl{ovql_corpus_comment_instances_jsonl(corpus.handle)};
            std::cout << jsonl.str();
            return kExitOk;
        }

        if (cmd_validate->parsed()) {
            CorpusGuard corpus;
            int code = ovql_corpus_load(validate_corpus.c_str(), &corpus.handle);
            if (code != OVQL_OK) return report_failure(code);
            OwnedString violations{ovql_corpus_validate_json(corpus.handle)};
            std::cout << violations.str() << "\n";
            return violations.str() == "[]" ? kExitOk : kExitDomain;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    return kExitUsage;
}
