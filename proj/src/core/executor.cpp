#include "core/executor.hpp"

#include "core/lexer.hpp"
#include "core/text.hpp"

#include "json.hpp"
#include "httplib.h"

#include <chrono>
#include <condition_variable>
#include <fstream>
#include <sstream>
#include <thread>

namespace ovql::exec {

using json = nlohmann::ordered_json;

std::string BoundingBox::to_string() const {
    return text::format_coord(south) + "," + text::format_coord(west) + "," +
           text::format_coord(north) + "," + text::format_coord(east);
}

void ExecutionConfig::validate() const {
    if (endpoint_url.empty()) throw std::invalid_argument("endpoint_url must be set");
    if (!(default_bbox.south < default_bbox.north))
        throw std::invalid_argument("default_bbox: south must be below north");
    if (default_bbox.west < -180.0 || default_bbox.west > 180.0 || default_bbox.east < -180.0 ||
        default_bbox.east > 180.0)
        throw std::invalid_argument("default_bbox: west/east out of range");
    if (max_inflight < 1) throw std::invalid_argument("max_inflight must be at least 1");
    if (retry.max_attempts < 1) throw std::invalid_argument("retry.max_attempts must be at least 1");
}

const char* execution_status_name(ExecutionStatus s) {
    switch (s) {
        case ExecutionStatus::Ok: return "ok";
        case ExecutionStatus::SyntaxError: return "syntax_error";
        case ExecutionStatus::RuntimeError: return "runtime_error";
        case ExecutionStatus::Timeout: return "timeout";
        case ExecutionStatus::TransportError: return "transport_error";
    }
    return "?";
}

// ---- geocoding ----

FixtureGeocodeResolver::FixtureGeocodeResolver(const std::filesystem::path& tsv_path) {
    std::ifstream in(tsv_path);
    if (!in.good())
        throw std::runtime_error("cannot open geocode fixture: " + tsv_path.string());
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto cols = text::split(line, '\t');
        if (cols.size() < 5) continue;
        GeocodeResult r;
        if (cols[1] == "node") r.kind = metrics::OsmKind::Node;
        else if (cols[1] == "way") r.kind = metrics::OsmKind::Way;
        else r.kind = metrics::OsmKind::Relation;
        r.id = std::stoull(cols[2]);
        r.lat = std::stod(cols[3]);
        r.lon = std::stod(cols[4]);
        entries_.emplace_back(cols[0], r);
    }
}

std::optional<GeocodeResult> FixtureGeocodeResolver::resolve(const std::string& name) {
    for (const auto& [n, r] : entries_)
        if (n == name) return r;
    return std::nullopt;
}

HttpGeocodeResolver::HttpGeocodeResolver(std::string base_url) : base_url_(std::move(base_url)) {}

std::optional<GeocodeResult> HttpGeocodeResolver::resolve(const std::string& name) {
    httplib::Client client(base_url_);
    client.set_read_timeout(30, 0);
    auto res = client.Get("/search?format=jsonv2&limit=1&q=" + text::percent_encode(name));
    if (!res || res->status != 200) return std::nullopt;
    json payload = json::parse(res->body, nullptr, false);
    if (payload.is_discarded() || !payload.is_array() || payload.empty()) return std::nullopt;
    const json& first = payload[0];
    GeocodeResult r;
    std::string type = first.value("osm_type", "");
    if (type == "node") r.kind = metrics::OsmKind::Node;
    else if (type == "way") r.kind = metrics::OsmKind::Way;
    else if (type == "relation") r.kind = metrics::OsmKind::Relation;
    else return std::nullopt;
    r.id = first.value("osm_id", 0ULL);
    r.lat = std::stod(first.value("lat", "0"));
    r.lon = std::stod(first.value("lon", "0"));
    return r;
}

// ---- macro expansion ----

namespace {

std::string expand_one(const oql::TurboMacro& m, const ExecutionConfig& cfg,
                       GeocodeResolver* resolver) {
    using oql::MacroKind;
    switch (m.kind) {
        case MacroKind::Bbox:
            return cfg.default_bbox.to_string();
        case MacroKind::GeocodeArea:
        case MacroKind::GeocodeCoords:
        case MacroKind::GeocodeId: {
            if (!resolver) throw MacroError("no geocode resolver configured for " + m.raw);
            auto hit = resolver->resolve(m.argument);
            if (!hit) throw MacroError("geocode not found: \"" + m.argument + "\"");
            if (m.kind == MacroKind::GeocodeCoords)
                return text::format_coord(hit->lat) + "," + text::format_coord(hit->lon);
            if (m.kind == MacroKind::GeocodeId) {
                return std::string(metrics::osm_kind_name(hit->kind)) + "(" +
                       std::to_string(hit->id) + ")";
            }
            // geocodeArea: the Overpass area derived from the object
            if (hit->kind == metrics::OsmKind::Relation)
                return "area(" + std::to_string(3600000000ULL + hit->id) + ")";
            if (hit->kind == metrics::OsmKind::Way)
                return "area(" + std::to_string(2400000000ULL + hit->id) + ")";
            throw MacroError("cannot derive an area from a node: \"" + m.argument + "\"");
        }
        case MacroKind::Other:
            break;
    }
    throw MacroError("unknown macro kind: " + m.raw);
}

}  // namespace

std::string expand_macros(std::string_view text_in, const ExecutionConfig& cfg,
                          GeocodeResolver* resolver) {
    auto tokens = oql::tokenize(text_in);
    std::string out;
    out.reserve(text_in.size());
    for (const auto& t : tokens) {
        if (t.kind != oql::TokenKind::TurboMacro) {
            out += t.lexeme;
            continue;
        }
        out += expand_one(oql::parse_macro_token(t.lexeme), cfg, resolver);
    }
    return out;
}

// ---- payload handling ----

namespace {

std::string json_to_pylike(const json& v) {
    auto quote = [](const std::string& s) {
        std::string out = "'";
        for (char c : s) {
            if (c == '\\' || c == '\'') out.push_back('\\');
            out.push_back(c);
        }
        out.push_back('\'');
        return out;
    };
    if (v.is_object()) {
        std::string out = "{";
        bool first = true;
        for (auto it = v.begin(); it != v.end(); ++it) {
            if (!first) out += ", ";
            first = false;
            out += quote(it.key()) + ": " + json_to_pylike(it.value());
        }
        return out + "}";
    }
    if (v.is_array()) {
        std::string out = "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ", ";
            out += json_to_pylike(v[i]);
        }
        return out + "]";
    }
    if (v.is_string()) return quote(v.get<std::string>());
    if (v.is_boolean()) return v.get<bool>() ? "True" : "False";
    if (v.is_null()) return "None";
    return v.dump();
}

std::optional<metrics::OsmKind> kind_from_name(std::string_view name) {
    if (name == "node") return metrics::OsmKind::Node;
    if (name == "way") return metrics::OsmKind::Way;
    if (name == "relation") return metrics::OsmKind::Relation;
    if (name == "area") return metrics::OsmKind::Area;
    return std::nullopt;
}

struct ExtractedPayload {
    metrics::ElementSet elements;
    std::uint64_t count = 0;
    std::vector<std::string> samples;
    std::vector<std::string> warnings;
};

constexpr std::size_t kMaxStoredSamples = 16;

ExtractedPayload extract_json(std::string_view payload) {
    ExtractedPayload out;
    json doc = json::parse(payload, nullptr, false);
    if (doc.is_discarded()) throw std::runtime_error("malformed JSON payload");
    if (!doc.contains("elements") || !doc["elements"].is_array())
        throw std::runtime_error("JSON payload has no elements array");
    for (const json& el : doc["elements"]) {
        ++out.count;
        metrics::ElementRef ref;
        auto kind = el.contains("type") && el["type"].is_string()
                        ? kind_from_name(el["type"].get<std::string>())
                        : std::nullopt;
        if (kind && el.contains("id") && el["id"].is_number()) {
            ref.kind = *kind;
            ref.id = el["id"].get<std::uint64_t>();
        } else {
            // make/convert output: no stable OSM id, identity by content
            json stripped = el;
            if (stripped.contains("id")) stripped.erase("id");
            ref.kind = metrics::OsmKind::Derived;
            ref.content_hash = text::sha256_hex(stripped.dump());
        }
        out.elements.insert(ref);
        if (out.samples.size() < kMaxStoredSamples) out.samples.push_back(json_to_pylike(el));
    }
    return out;
}

ExtractedPayload extract_xml(std::string_view payload) {
    ExtractedPayload out;
    if (payload.find('<') == std::string_view::npos)
        throw std::runtime_error("malformed XML payload");
    static const std::pair<std::string_view, metrics::OsmKind> kTags[] = {
        {"<node", metrics::OsmKind::Node},
        {"<way", metrics::OsmKind::Way},
        {"<relation", metrics::OsmKind::Relation},
        {"<area", metrics::OsmKind::Area},
    };
    for (std::size_t i = 0; i < payload.size();) {
        if (payload[i] != '<') {
            ++i;
            continue;
        }
        bool matched = false;
        for (const auto& [tag, kind] : kTags) {
            if (payload.substr(i, tag.size()) != tag) continue;
            char after = i + tag.size() < payload.size() ? payload[i + tag.size()] : '\0';
            if (after != ' ' && after != '\t' && after != '\n' && after != '/' && after != '>')
                continue;
            std::size_t close = payload.find('>', i);
            if (close == std::string_view::npos) close = payload.size() - 1;
            std::string_view tag_text = payload.substr(i, close - i + 1);
            auto id_pos = tag_text.find("id=\"");
            if (id_pos != std::string_view::npos) {
                auto id_end = tag_text.find('"', id_pos + 4);
                std::uint64_t id =
                    std::stoull(std::string(tag_text.substr(id_pos + 4, id_end - id_pos - 4)));
                ++out.count;
                out.elements.insert({kind, id, ""});
                if (out.samples.size() < kMaxStoredSamples)
                    out.samples.emplace_back(tag_text);
            }
            i = close + 1;
            matched = true;
            break;
        }
        if (!matched) ++i;
    }
    return out;
}

ExtractedPayload extract_csv(std::string_view payload) {
    ExtractedPayload out;
    std::vector<std::string> lines;
    std::string current;
    for (char c : payload) {
        if (c == '\n') {
            lines.push_back(current);
            current.clear();
        } else if (c != '\r') {
            current.push_back(c);
        }
    }
    if (!current.empty()) lines.push_back(current);
    if (lines.empty()) throw std::runtime_error("empty CSV payload");

    auto header = text::split(lines[0], '\t');
    int id_col = -1, type_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "@id") id_col = static_cast<int>(i);
        if (header[i] == "@type") type_col = static_cast<int>(i);
    }
    if (id_col < 0)
        out.warnings.push_back(
            "CSV output carries no @id column; falling back to content-hash identity");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        ++out.count;
        auto cols = text::split(lines[i], '\t');
        metrics::ElementRef ref;
        if (id_col >= 0 && static_cast<std::size_t>(id_col) < cols.size()) {
            std::optional<metrics::OsmKind> kind;
            if (type_col >= 0 && static_cast<std::size_t>(type_col) < cols.size())
                kind = kind_from_name(cols[type_col]);
            ref.kind = kind.value_or(metrics::OsmKind::Node);
            ref.id = std::stoull(cols[id_col]);
        } else {
            ref.kind = metrics::OsmKind::Derived;
            ref.content_hash = text::sha256_hex(lines[i]);
        }
        out.elements.insert(ref);
        if (out.samples.size() < kMaxStoredSamples) out.samples.push_back(lines[i]);
    }
    return out;
}

ExtractedPayload extract_payload(std::string_view payload, PayloadFormat format) {
    switch (format) {
        case PayloadFormat::Json: return extract_json(payload);
        case PayloadFormat::Xml: return extract_xml(payload);
        case PayloadFormat::Csv: return extract_csv(payload);
    }
    throw std::runtime_error("unknown payload format");
}

PayloadFormat sniff_format(std::string_view body) {
    std::string_view trimmed = text::trim(body);
    if (!trimmed.empty() && trimmed.front() == '{') return PayloadFormat::Json;
    if (!trimmed.empty() && trimmed.front() == '<') return PayloadFormat::Xml;
    return PayloadFormat::Csv;
}

// The public Overpass instances wrap errors in HTML; pull out the plain
// error lines so feedback keeps the server's wording.
std::string strip_html_errors(const std::string& body) {
    if (body.find('<') == std::string::npos) return body;
    std::string text_only;
    bool in_tag = false;
    for (char c : body) {
        if (c == '<') in_tag = true;
        else if (c == '>') in_tag = false;
        else if (!in_tag) text_only.push_back(c);
    }
    std::string errors;
    std::istringstream lines(text_only);
    std::string line;
    while (std::getline(lines, line)) {
        std::string_view t = text::trim(line);
        if (t.find("Error") != std::string_view::npos) {
            if (!errors.empty()) errors += '\n';
            errors += std::string(t);
        }
    }
    return errors.empty() ? body : errors;
}

}  // namespace

metrics::ElementSet extract_elements(std::string_view payload, PayloadFormat format) {
    return extract_payload(payload, format).elements;
}

std::string feedback_from_outcome(const ExecutionOutcome& outcome, int sample_size) {
    if (!outcome.ok()) return outcome.error_message;
    if (outcome.returned_count == 0) return "No Results found.";
    std::string out;
    int n = 0;
    for (const auto& s : outcome.samples) {
        if (n >= sample_size) break;
        if (n) out += '\n';
        out += s;
        ++n;
    }
    return out;
}

// ---- executor ----

struct Executor::Gate {
    std::mutex mutex;
    std::condition_variable cv;
    int in_use = 0;
};

Executor::Executor(ExecutionConfig cfg, std::shared_ptr<GeocodeResolver> resolver)
    : cfg_(std::move(cfg)), resolver_(std::move(resolver)), gate_(std::make_unique<Gate>()) {
    cfg_.validate();
    if (cfg_.cache_dir) std::filesystem::create_directories(*cfg_.cache_dir);
}

Executor::~Executor() = default;

std::string Executor::expand(std::string_view text) const {
    return expand_macros(text, cfg_, resolver_.get());
}

namespace {

json outcome_to_json(const ExecutionOutcome& o) {
    json j;
    j["status"] = execution_status_name(o.status);
    j["error_message"] = o.error_message;
    j["returned_count"] = o.returned_count;
    j["elapsed"] = o.elapsed;
    j["warnings"] = o.warnings;
    j["samples"] = o.samples;
    json els = json::array();
    for (const auto& e : o.elements) {
        json el;
        el["kind"] = metrics::osm_kind_name(e.kind);
        el["id"] = e.id;
        if (!e.content_hash.empty()) el["hash"] = e.content_hash;
        els.push_back(el);
    }
    j["elements"] = els;
    return j;
}

ExecutionOutcome outcome_from_json(const json& j) {
    ExecutionOutcome o;
    std::string status = j.value("status", "transport_error");
    for (auto s : {ExecutionStatus::Ok, ExecutionStatus::SyntaxError, ExecutionStatus::RuntimeError,
                   ExecutionStatus::Timeout, ExecutionStatus::TransportError}) {
        if (status == execution_status_name(s)) o.status = s;
    }
    o.error_message = j.value("error_message", "");
    o.returned_count = j.value("returned_count", std::uint64_t{0});
    o.elapsed = j.value("elapsed", 0.0);
    if (j.contains("warnings")) o.warnings = j["warnings"].get<std::vector<std::string>>();
    if (j.contains("samples")) o.samples = j["samples"].get<std::vector<std::string>>();
    if (j.contains("elements")) {
        for (const json& el : j["elements"]) {
            metrics::ElementRef ref;
            std::string kind = el.value("kind", "node");
            if (kind == "node") ref.kind = metrics::OsmKind::Node;
            else if (kind == "way") ref.kind = metrics::OsmKind::Way;
            else if (kind == "relation") ref.kind = metrics::OsmKind::Relation;
            else if (kind == "area") ref.kind = metrics::OsmKind::Area;
            else ref.kind = metrics::OsmKind::Derived;
            ref.id = el.value("id", std::uint64_t{0});
            ref.content_hash = el.value("hash", "");
            o.elements.insert(ref);
        }
    }
    return o;
}

}  // namespace

std::optional<ExecutionOutcome> Executor::cache_lookup(const std::string& key) const {
    if (!cfg_.cache_dir) return std::nullopt;
    auto path = *cfg_.cache_dir / (key + ".json");
    std::ifstream in(path);
    if (!in.good()) return std::nullopt;
    std::stringstream buf;
    buf << in.rdbuf();
    json j = json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    ExecutionOutcome o = outcome_from_json(j);
    o.from_cache = true;
    return o;
}

void Executor::cache_store(const std::string& key, const ExecutionOutcome& outcome) const {
    if (!cfg_.cache_dir) return;
    auto path = *cfg_.cache_dir / (key + ".json");
    auto tmp = *cfg_.cache_dir / (key + ".tmp");
    {
        std::ofstream out(tmp);
        out << outcome_to_json(outcome).dump(2);
    }
    std::filesystem::rename(tmp, path);
}

ExecutionOutcome Executor::execute(const std::string& text_in) {
    auto started = std::chrono::steady_clock::now();
    // outer whitespace is insignificant to the server; trimming keeps cache
    // keys stable across trailing-newline variants
    std::string query(text::trim(text_in));
    std::string expanded;
    try {
        expanded = expand_macros(query, cfg_, resolver_.get());
    } catch (const MacroError& e) {
        ExecutionOutcome o;
        o.status = ExecutionStatus::RuntimeError;
        o.error_message = e.what();
        return o;
    } catch (const oql::LexError&) {
        // not even tokenizable; ship it verbatim and let the server answer
        expanded = query;
    }

    std::string key = text::sha256_hex(cfg_.endpoint_url + "\n" + expanded);
    if (auto cached = cache_lookup(key)) return *cached;

    {
        std::unique_lock<std::mutex> lock(gate_->mutex);
        gate_->cv.wait(lock, [&] { return gate_->in_use < cfg_.max_inflight; });
        ++gate_->in_use;
    }
    ExecutionOutcome outcome = run_request(expanded);
    {
        std::lock_guard<std::mutex> lock(gate_->mutex);
        --gate_->in_use;
    }
    gate_->cv.notify_one();

    outcome.elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    cache_store(key, outcome);
    return outcome;
}

ExecutionOutcome Executor::run_request(const std::string& expanded) {
    ExecutionOutcome outcome;
    std::string body = "data=" + text::percent_encode(expanded);

    for (int attempt = 1; attempt <= cfg_.retry.max_attempts; ++attempt) {
        httplib::Client client(cfg_.endpoint_url);
        client.set_connection_timeout(static_cast<time_t>(cfg_.request_timeout), 0);
        client.set_read_timeout(static_cast<time_t>(cfg_.request_timeout), 0);
        auto res = client.Post("/api/interpreter", body, "application/x-www-form-urlencoded");

        bool retryable = false;
        if (!res) {
            outcome.status = ExecutionStatus::TransportError;
            outcome.error_message = "connection failed: " + httplib::to_string(res.error());
            retryable = true;
        } else if (res->status == 200) {
            try {
                // runtime problems surface as a remark in an otherwise OK response
                if (res->body.find("\"remark\"") != std::string::npos ||
                    res->body.find("<remark>") != std::string::npos) {
                    json doc = json::parse(res->body, nullptr, false);
                    std::string remark =
                        doc.is_discarded() ? "runtime error" : doc.value("remark", "");
                    outcome.status = remark.find("imed out") != std::string::npos
                                         ? ExecutionStatus::Timeout
                                         : ExecutionStatus::RuntimeError;
                    outcome.error_message = remark;
                } else {
                    ExtractedPayload extracted =
                        extract_payload(res->body, sniff_format(res->body));
                    outcome.status = ExecutionStatus::Ok;
                    outcome.elements = std::move(extracted.elements);
                    outcome.returned_count = extracted.count;
                    outcome.samples = std::move(extracted.samples);
                    outcome.warnings = std::move(extracted.warnings);
                }
            } catch (const std::exception& e) {
                outcome.status = ExecutionStatus::RuntimeError;
                outcome.error_message = std::string("malformed payload: ") + e.what();
            }
        } else if (res->status == 400) {
            outcome.status = ExecutionStatus::SyntaxError;
            outcome.error_message = strip_html_errors(res->body);
        } else if (res->status == 504) {
            outcome.status = ExecutionStatus::Timeout;
            outcome.error_message = "HTTP 504: gateway timeout";
            retryable = true;
        } else {
            outcome.status = ExecutionStatus::RuntimeError;
            outcome.error_message =
                "HTTP " + std::to_string(res->status) + ": " + strip_html_errors(res->body);
            retryable = res->status == 429 || res->status >= 500;
        }

        if (!retryable || attempt == cfg_.retry.max_attempts) break;
        std::this_thread::sleep_for(
            std::chrono::duration<double>(cfg_.retry.backoff_seconds * attempt));
    }
    return outcome;
}

}  // namespace ovql::exec
