#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctphish/ctlog/client.hpp"
#include "ctphish/intel/schedule.hpp"
#include "ctphish/util/json.hpp"

namespace ctphish::config {

struct FilterPaths {
    std::string benign_services;  ///< empty: bundled list
    std::string popular_domains;  ///< empty: bundled list
    std::string malicious_domains;
    bool operator==(const FilterPaths&) const = default;
};

struct Workers {
    std::size_t fetch = 4;
    std::size_t classify = 2;
    std::size_t hooks = 1;
    std::size_t tls = 8;
    bool operator==(const Workers&) const = default;
};

struct Chunks {
    std::uint64_t chunk_size = 1000;
    std::uint64_t gap = 0;
    std::uint64_t page_size = 256;
    bool operator==(const Chunks&) const = default;
};

struct Paths {
    std::string data_dir = "ctphish-data";
    std::string intel_db;  ///< default <data_dir>/intel.sqlite
    std::string results;   ///< default <data_dir>/results.jsonl
    std::string cursors;   ///< default <data_dir>/cursors.json
    std::string hooks;     ///< hook file; empty: no hooks
    bool operator==(const Paths&) const = default;
};

struct Retry {
    std::chrono::milliseconds base{1000};
    std::chrono::milliseconds cap{60'000};
    int max_attempts = 8;
    std::chrono::milliseconds request_timeout{30'000};
    bool operator==(const Retry&) const = default;

    ctlog::RetryPolicy policy() const;
};

/// Effective configuration of every subcommand.
struct PipelineConfig {
    std::vector<ctlog::LogSource> logs;
    std::vector<intel::FeedDefinition> feeds;
    std::map<std::string, std::chrono::milliseconds> feed_intervals;  ///< overrides of the default schedule
    FilterPaths filters;
    Workers workers;
    Chunks chunks;
    Retry retry;
    std::chrono::milliseconds poll_interval{10'000};
    std::string model;
    double threshold = 0.5;
    std::vector<double> target_fprs{1e-3, 5e-4, 1e-4};
    Paths paths;

    bool operator==(const PipelineConfig& o) const;

    intel::FeedSchedule schedule() const;
    std::string intel_db() const;
    std::string results() const;
    std::string cursors() const;

    /// Range and consistency checks; creates data_dir and the parents of
    /// output paths; input files must exist. Throws ConfigError.
    void validate() const;
};

Json to_json(const PipelineConfig& c);
/// Unknown keys anywhere are rejected with ConfigError.
PipelineConfig config_from_json(const Json& j);

/// Dotted keys accepted by apply_override, e.g. "workers.classify".
std::vector<std::string> scalar_keys();

/// Sets one key from its textual form. Scalars are parsed by the key's type
/// (durations accept "10s" forms); "logs", "feeds", "feed_intervals" and
/// "target_fprs" take JSON or, for target_fprs, a comma-separated list.
void apply_override(PipelineConfig& c, const std::string& key, const std::string& value);

/// CTPHISH_WORKERS_CLASSIFY -> "workers.classify", with CTPHISH_DATA_DIR as a
/// short alias of paths.data_dir; nullopt for CTPHISH_CONFIG, CTPHISH_LOG_LEVEL
/// and non-CTPHISH names. Throws ConfigError for unknown CTPHISH_ names.
std::optional<std::string> env_key(const std::string& name);

struct LoadOptions {
    std::optional<std::string> file;
    std::map<std::string, std::string> env;                       ///< CTPHISH_* variables
    std::vector<std::pair<std::string, std::string>> overrides;  ///< flags, applied last, in order
};

/// defaults < file < environment < flags, then validate().
PipelineConfig load(const LoadOptions& options);

/// CTPHISH_* variables of the current process.
std::map<std::string, std::string> process_env();

PipelineConfig load_file(const std::string& path);
void save_file(const PipelineConfig& c, const std::string& path);

}  // namespace ctphish::config
