#include "core/dataset.hpp"

#include "core/lexer.hpp"
#include "core/parser.hpp"
#include "core/syntax_tree.hpp"
#include "core/text.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace ovql::dataset {

using json = nlohmann::ordered_json;

const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        case Split::Test: return "test";
    }
    return "?";
}

std::optional<Split> split_from_name(std::string_view name) {
    if (name == "train") return Split::Train;
    if (name == "dev" || name == "development" || name == "valid" || name == "validation")
        return Split::Dev;
    if (name == "test") return Split::Test;
    return std::nullopt;
}

const Instance* Corpus::find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &instances[it->second];
}

std::vector<const Instance*> Corpus::split_instances(Split s) const {
    std::vector<const Instance*> out;
    for (const auto& inst : instances)
        if (inst.split == s) out.push_back(&inst);
    return out;
}

std::size_t Corpus::split_size(Split s) const {
    std::size_t n = 0;
    for (const auto& inst : instances) n += inst.split == s;
    return n;
}

void Corpus::rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < instances.size(); ++i) index_[instances[i].id] = i;
}

Corpus load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.good()) throw LoadError("cannot open corpus file: " + path.string(), 0);
    Corpus corpus;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object())
            throw LoadError("line " + std::to_string(line_no) + ": not a JSON object", line_no);
        for (const char* field : {"id", "nl", "query", "split"}) {
            if (!record.contains(field) || !record[field].is_string())
                throw LoadError("line " + std::to_string(line_no) + ": missing field \"" +
                                    field + "\"",
                                line_no);
        }
        Instance inst;
        inst.id = record["id"].get<std::string>();
        inst.nl = record["nl"].get<std::string>();
        inst.query = record["query"].get<std::string>();
        auto split = split_from_name(record["split"].get<std::string>());
        if (!split)
            throw LoadError("line " + std::to_string(line_no) + ": unknown split \"" +
                                record["split"].get<std::string>() + "\"",
                            line_no);
        inst.split = *split;
        inst.synthetic = record.value("synthetic", false);
        if (inst.nl.empty() || inst.query.empty())
            throw LoadError("line " + std::to_string(line_no) + ": empty nl or query", line_no);
        if (!seen_ids.insert(inst.id).second)
            throw LoadError("line " + std::to_string(line_no) + ": duplicate id \"" + inst.id +
                                "\"",
                            line_no);
        corpus.instances.push_back(std::move(inst));
    }
    corpus.rebuild_index();
    return corpus;
}

void save(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out.good()) throw std::runtime_error("cannot write corpus file: " + path.string());
    for (const auto& inst : corpus.instances) {
        json record;
        record["id"] = inst.id;
        record["nl"] = inst.nl;
        record["query"] = inst.query;
        record["split"] = split_name(inst.split);
        if (inst.synthetic) record["synthetic"] = true;
        out << record.dump() << '\n';
    }
}

double StatsReport::feature_prevalence(oql::Feature f) const {
    if (total == 0) return 0.0;
    return static_cast<double>(feature_counts[static_cast<std::size_t>(f)]) /
           static_cast<double>(total);
}

StatsReport stats(const Corpus& corpus) {
    StatsReport r;
    r.total = corpus.instances.size();

    std::set<std::string> words;
    std::set<std::string> templates;
    std::set<std::string> keys, values;
    std::set<std::pair<std::string, std::string>> pairs;
    double input_chars = 0.0, query_chars = 0.0;
    std::size_t unit_sum = 0;

    for (const auto& inst : corpus.instances) {
        switch (inst.split) {
            case Split::Train: ++r.train; break;
            case Split::Dev: ++r.dev; break;
            case Split::Test: ++r.test; break;
        }
        input_chars += static_cast<double>(text::utf8_length(inst.nl));
        query_chars += static_cast<double>(text::utf8_length(inst.query));
        std::string lowered = text::to_lower_ascii(inst.nl);
        for (auto w : text::split_ws(lowered)) words.insert(std::string(w));

        try {
            oql::QueryAst ast = oql::parse(inst.query);
            ++r.parsed;
            unit_sum += oql::count_syntactic_units(ast);
            templates.insert(oql::normalize_template(ast));
            oql::KvSet kv = oql::extract_kv(ast);
            keys.insert(kv.keys.begin(), kv.keys.end());
            values.insert(kv.values.begin(), kv.values.end());
            pairs.insert(kv.pairs.begin(), kv.pairs.end());
            for (oql::Feature f : oql::detect_features(ast).to_list())
                ++r.feature_counts[static_cast<std::size_t>(f)];
        } catch (const oql::ParseError& e) {
            r.failures.push_back({inst.id, e.describe()});
        } catch (const oql::LexError& e) {
            r.failures.push_back({inst.id, e.what()});
        }
    }

    if (r.total > 0) {
        r.mean_input_chars = input_chars / static_cast<double>(r.total);
        r.mean_query_chars = query_chars / static_cast<double>(r.total);
    }
    if (r.parsed > 0)
        r.mean_syntactic_units = static_cast<double>(unit_sum) / static_cast<double>(r.parsed);
    r.distinct_input_words = words.size();
    r.distinct_templates = templates.size();
    r.unique_keys = keys.size();
    r.unique_values = values.size();
    r.unique_pairs = pairs.size();
    return r;
}

std::string render_stats(const StatsReport& r) {
    std::ostringstream out;
    char buf[64];
    auto line = [&](const char* label, const std::string& value) {
        std::snprintf(buf, sizeof(buf), "%-28s %s", label, value.c_str());
        out << buf << '\n';
    };
    auto fp1 = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.1f", v);
        return std::string(buf);
    };
    line("instances", std::to_string(r.total));
    line("  train / dev / test", std::to_string(r.train) + " / " + std::to_string(r.dev) + " / " +
                                     std::to_string(r.test));
    line("parsed", std::to_string(r.parsed));
    line("parse failures", std::to_string(r.failures.size()));
    line("distinct input words", std::to_string(r.distinct_input_words));
    line("mean input length (chars)", fp1(r.mean_input_chars));
    line("mean query length (chars)", fp1(r.mean_query_chars));
    line("mean syntactic units", fp1(r.mean_syntactic_units));
    line("query templates", std::to_string(r.distinct_templates));
    line("unique keys", std::to_string(r.unique_keys));
    line("unique values", std::to_string(r.unique_values));
    line("unique key-value pairs", std::to_string(r.unique_pairs));
    out << '\n' << "syntax feature prevalence:" << '\n';
    std::string group;
    for (const auto& info : oql::feature_taxonomy()) {
        if (group != info.group) {
            group = info.group;
            out << "  " << group << '\n';
        }
        std::size_t count = r.feature_counts[static_cast<std::size_t>(info.id)];
        double pct = r.total ? 100.0 * static_cast<double>(count) / static_cast<double>(r.total)
                             : 0.0;
        std::snprintf(buf, sizeof(buf), "    %-28s %8zu  %5.1f%%", info.display, count, pct);
        out << buf << '\n';
    }
    return out.str();
}

namespace {

std::string normalize_input(std::string_view nl) {
    std::string lowered = text::to_lower_ascii(nl);
    std::string stripped;
    stripped.reserve(lowered.size());
    for (char c : lowered) {
        unsigned char u = static_cast<unsigned char>(c);
        bool punct = (u >= '!' && u <= '/') || (u >= ':' && u <= '@') || (u >= '[' && u <= '`') ||
                     (u >= '{' && u <= '~');
        stripped.push_back(punct ? ' ' : c);
    }
    std::string out;
    for (auto piece : text::split_ws(stripped)) {
        if (!out.empty()) out.push_back(' ');
        out += piece;
    }
    return out;
}

std::string query_fingerprint(const std::string& query) {
    try {
        return oql::normalize_template(oql::parse(query));
    } catch (const std::exception&) {
        return "raw:" + query;
    }
}

}  // namespace

std::vector<SplitViolation> validate_splits(const Corpus& corpus) {
    std::vector<SplitViolation> out;
    std::unordered_map<std::string, std::vector<const Instance*>> train_templates;
    std::unordered_map<std::string, std::vector<const Instance*>> train_inputs;
    for (const auto& inst : corpus.instances) {
        if (inst.split != Split::Train) continue;
        train_templates[query_fingerprint(inst.query)].push_back(&inst);
        train_inputs[normalize_input(inst.nl)].push_back(&inst);
    }
    for (const auto& inst : corpus.instances) {
        if (inst.split == Split::Train) continue;
        auto qt = train_templates.find(query_fingerprint(inst.query));
        if (qt != train_templates.end())
            for (const Instance* t : qt->second) out.push_back({t->id, inst.id, "query"});
        auto ni = train_inputs.find(normalize_input(inst.nl));
        if (ni != train_inputs.end())
            for (const Instance* t : ni->second) out.push_back({t->id, inst.id, "input"});
    }
    return out;
}

std::vector<Instance> comment_instances(const Corpus& corpus) {
    std::vector<Instance> out;
    for (const auto& inst : corpus.instances) {
        if (inst.split != Split::Train || inst.synthetic) continue;
        std::vector<std::pair<std::string, std::string>> comments;
        try {
            comments = oql::extract_comments(inst.query);
        } catch (const oql::LexError&) {
            continue;
        }
        if (comments.empty()) continue;
        std::string joined;
        for (const auto& [comment, stripped] : comments) {
            if (comment.empty()) continue;
            if (!joined.empty()) joined.push_back(' ');
            joined += comment;
        }
        if (joined.empty()) continue;
        Instance synth;
        synth.id = inst.id + "#comments";
        synth.nl = joined;
        synth.query = comments.front().second;
        synth.split = Split::Train;
        synth.synthetic = true;
        if (synth.query.empty()) continue;
        out.push_back(std::move(synth));
    }
    return out;
}

KeyUsageTable load_key_usage(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.good()) throw std::runtime_error("cannot open key usage table: " + path.string());
    KeyUsageTable table;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto cols = text::split(line, '\t');
        if (cols.size() < 2) continue;
        table.emplace_back(cols[0], std::stoull(cols[1]));
    }
    return table;
}

double key_coverage(const Corpus& corpus, const KeyUsageTable& table) {
    std::set<std::string> corpus_keys;
    for (const auto& inst : corpus.instances) {
        try {
            oql::KvSet kv = oql::extract_kv(oql::parse(inst.query));
            corpus_keys.insert(kv.keys.begin(), kv.keys.end());
        } catch (const std::exception&) {
        }
    }
    std::uint64_t covered = 0, total = 0;
    for (const auto& [key, usage] : table) {
        total += usage;
        if (corpus_keys.count(key)) covered += usage;
    }
    if (total == 0) return 0.0;
    return static_cast<double>(covered) / static_cast<double>(total);
}

}  // namespace ovql::dataset
