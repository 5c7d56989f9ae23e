#pragma once

#include "core/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ovql::exec {

struct BoundingBox {
    double south = 0, west = 0, north = 0, east = 0;

    std::string to_string() const;  // "south,west,north,east"
};

struct RetryPolicy {
    int max_attempts = 3;
    double backoff_seconds = 1.0;
};

struct ExecutionConfig {
    std::string endpoint_url = "https://overpass-api.de";
    double request_timeout = 180.0;
    BoundingBox default_bbox{47.26, 5.86, 55.06, 15.05};
    int max_inflight = 2;
    RetryPolicy retry;
    std::optional<std::filesystem::path> cache_dir;

    void validate() const;  // throws std::invalid_argument
};

enum class ExecutionStatus { Ok, SyntaxError, RuntimeError, Timeout, TransportError };

const char* execution_status_name(ExecutionStatus s);

struct ExecutionOutcome {
    ExecutionStatus status = ExecutionStatus::TransportError;
    metrics::ElementSet elements;  // meaningful only when status == Ok
    std::string error_message;    // server text, verbatim, when status != Ok
    double elapsed = 0.0;
    std::uint64_t returned_count = 0;
    // canonical serializations of the first returned elements, payload order
    std::vector<std::string> samples;
    std::vector<std::string> warnings;
    bool from_cache = false;

    bool ok() const { return status == ExecutionStatus::Ok; }
};

struct GeocodeResult {
    metrics::OsmKind kind = metrics::OsmKind::Relation;
    std::uint64_t id = 0;
    double lat = 0, lon = 0;
};

class GeocodeResolver {
public:
    virtual ~GeocodeResolver() = default;
    virtual std::optional<GeocodeResult> resolve(const std::string& name) = 0;
};

// name<TAB>kind<TAB>id<TAB>lat<TAB>lon per line
class FixtureGeocodeResolver : public GeocodeResolver {
public:
    explicit FixtureGeocodeResolver(const std::filesystem::path& tsv_path);
    std::optional<GeocodeResult> resolve(const std::string& name) override;

private:
    std::vector<std::pair<std::string, GeocodeResult>> entries_;
};

// Nominatim-style HTTP search endpoint
class HttpGeocodeResolver : public GeocodeResolver {
public:
    explicit HttpGeocodeResolver(std::string base_url);
    std::optional<GeocodeResult> resolve(const std::string& name) override;

private:
    std::string base_url_;
};

class MacroError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Rewrites {{bbox}}, {{geocodeArea:...}}, {{geocodeCoords:...}} and
// {{geocodeId:...}} into plain OverpassQL. Area ids follow the Overpass
// convention: 3600000000 + relation id, 2400000000 + way id. Text without
// macros comes back unchanged; unknown macros or failed geocoding throw
// MacroError.
std::string expand_macros(std::string_view text, const ExecutionConfig& cfg,
                          GeocodeResolver* resolver);

enum class PayloadFormat { Json, Xml, Csv };

// One ElementRef per returned element; duplicates collapse. Elements without
// a stable OSM identity (make/convert output, id-less CSV rows) get
// content-hash identity. Throws std::runtime_error on malformed payloads.
metrics::ElementSet extract_elements(std::string_view payload, PayloadFormat format);

// Error text for failures, `No Results found.` for empty results, otherwise
// the first sample_size returned elements, one per line.
std::string feedback_from_outcome(const ExecutionOutcome& outcome, int sample_size);

// Shared-state query runner: bounded in-flight requests, optional on-disk
// outcome cache, safe for concurrent use.
class Executor {
public:
    Executor(ExecutionConfig cfg, std::shared_ptr<GeocodeResolver> resolver);
    ~Executor();

    Executor(const Executor&) = delete;
    Executor& operator=(const Executor&) = delete;

    // Expands macros and POSTs data=<query> to <endpoint>/api/interpreter.
    // Never throws for query or server problems; they come back as non-ok
    // outcomes.
    ExecutionOutcome execute(const std::string& text);

    // expand_macros with this executor's configuration and resolver
    std::string expand(std::string_view text) const;

    const ExecutionConfig& config() const { return cfg_; }

private:
    ExecutionOutcome run_request(const std::string& expanded);
    std::optional<ExecutionOutcome> cache_lookup(const std::string& key) const;
    void cache_store(const std::string& key, const ExecutionOutcome& outcome) const;

    ExecutionConfig cfg_;
    std::shared_ptr<GeocodeResolver> resolver_;
    struct Gate;
    std::unique_ptr<Gate> gate_;
};

}  // namespace ovql::exec
