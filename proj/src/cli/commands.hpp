#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "ctphish/config/config.hpp"

namespace ctphish::cli {

/// A usage problem detected after parsing (exit code 2).
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Context {
    std::ostream& out;
    std::ostream& err;
    std::optional<std::string> config_file;
    std::vector<std::string> sets;  ///< KEY=VALUE overrides

    /// Layered configuration plus command-specific flag overrides.
    config::PipelineConfig resolve(std::vector<std::pair<std::string, std::string>> extra = {}) const;
};

struct FixtureGenArgs {
    std::string out_dir;
    std::size_t benign = 10000;
    std::size_t phish = 50;
    std::uint64_t seed = 1;
    std::string log_name = "fixture";
    std::size_t precert_every = 0;
    std::uint64_t page_size = 256;
    std::uint64_t initial_size = 0;
    std::uint64_t growth = 0;
    std::string growth_every;
};
int fixture_gen(Context& ctx, const FixtureGenArgs& a);

struct FixtureServerArgs {
    std::string spec;
    std::string host = "127.0.0.1";
    int port = 0;
    std::string port_file;
    std::string duration;
};
int fixture_server(Context& ctx, const FixtureServerArgs& a);

struct IngestArgs {
    std::vector<std::string> feeds;  ///< NAME=SOURCE@URL
    bool force = false;
    std::string db;
};
int ingest_feeds(Context& ctx, const IngestArgs& a);

struct BuildDatasetArgs {
    std::string benign_log;  ///< NAME=URL or a configured log name
    std::optional<std::uint64_t> first, last;
    std::string from, to;
    std::optional<std::uint64_t> chunk_size, gap;
    std::string phish_urls;
    std::string phish_certs;
    std::string connect_host;
    std::optional<int> tls_port;
    std::string db;
    bool no_balance = false;
    std::uint64_t seed = 0;
    std::string created_at;
    std::string out;
    std::string report;
};
int build_dataset(Context& ctx, const BuildDatasetArgs& a);

struct TrainArgs {
    std::string dataset;
    std::string out;
    std::string kind = "forest";
    std::string features = "all";
    std::string mode = "domain";
    std::string meta = "max";
    std::size_t trees = 200;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    std::string rules;
};
int train(Context& ctx, const TrainArgs& a);

struct ClassifyArgs {
    std::string model;
    bool live = false;
    bool all = false;
    std::string from, to;
    std::optional<std::uint64_t> first, last;
    std::vector<std::string> logs;  ///< NAME=URL
    std::optional<double> threshold;
    std::string hooks;
    std::string out;
    std::optional<std::size_t> workers;
    std::optional<std::uint64_t> start_index;
    std::optional<std::uint64_t> idle_polls;
    std::optional<std::uint64_t> max_polls;
    std::string poll_interval;
    std::string cursors;
    bool no_cursors = false;
    bool verify = false;
    std::string db;
};
int classify(Context& ctx, const ClassifyArgs& a);

struct EvaluateArgs {
    std::string results;
    std::string labels;
    std::string model;
    std::string dataset;
    std::vector<double> targets;
    std::string roc;
    bool json = false;
    bool print_threshold = false;
};
int evaluate(Context& ctx, const EvaluateArgs& a);

struct VerifyArgs {
    std::string results;
    std::vector<std::string> domains;
    std::string db;
    bool json = false;
};
int verify(Context& ctx, const VerifyArgs& a);

struct ReportArgs {
    std::string results;
    std::string labels;
    std::vector<double> targets;
    std::optional<double> threshold;
    bool use_db = false;
    std::string db;
    bool json = false;
};
int report(Context& ctx, const ReportArgs& a);

struct FeaturesArgs {
    std::string certs;
    std::string dataset;
    std::string set = "all";
    std::string mode = "domain";
    std::string model;
    std::string out;
};
int features(Context& ctx, const FeaturesArgs& a);

struct SelectArgs {
    std::string model;
    std::optional<std::size_t> k;
    std::optional<double> min_importance;
    std::string out;
    bool json = false;
};
int select_features(Context& ctx, const SelectArgs& a);

struct ConfigArgs {
    bool keys = false;
    std::string write;
};
int config_cmd(Context& ctx, const ConfigArgs& a);

}  // namespace ctphish::cli
