#include "ctphish/cli/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "ctphish/errors.hpp"

namespace ctphish::cli {

std::atomic<bool>& stop_flag() {
    static std::atomic<bool> flag{false};
    return flag;
}

namespace {

template <class T>
CLI::Option* add_optional(CLI::App* app, const std::string& name, std::optional<T>& target, const std::string& desc) {
    return app->add_option_function<T>(name, [&target](const T& v) { target = v; }, desc);
}

void configure_logging(const std::string& level) {
    static auto logger = [] {
        auto l = spdlog::stderr_color_mt("ctphish");
        spdlog::set_default_logger(l);
        return l;
    }();
    auto lvl = spdlog::level::from_str(level);
    if (lvl == spdlog::level::off && level != "off") throw UsageError("unknown log level '" + level + "'");
    logger->set_level(lvl);
}

extern "C" void on_signal(int) { stop_flag().store(true); }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Phishing detection over Certificate Transparency logs", "ctphish"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "ctphish 0.1.0");

    std::string config_file;
    std::vector<std::string> sets;
    std::string log_level;
    app.add_option("--config", config_file, "JSON configuration file (also CTPHISH_CONFIG)");
    app.add_option("--set", sets, "Override a configuration key, KEY=VALUE (repeatable)");
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off (also CTPHISH_LOG_LEVEL)");

    std::function<int(Context&)> action;

    FixtureGenArgs fg;
    auto* c_fg = app.add_subcommand("fixture-gen", "Generate a synthetic CT corpus with planted phishing certificates");
    c_fg->add_option("--out", fg.out_dir, "Output directory")->required();
    c_fg->add_option("--benign", fg.benign, "Benign certificates")->capture_default_str();
    c_fg->add_option("--phish", fg.phish, "Planted phishing certificates")->capture_default_str();
    c_fg->add_option("--seed", fg.seed, "Generator seed")->capture_default_str();
    c_fg->add_option("--log-name", fg.log_name, "Log name in the fixture spec")->capture_default_str();
    c_fg->add_option("--precert-every", fg.precert_every, "Serve every k-th entry as a precertificate");
    c_fg->add_option("--page-size", fg.page_size, "get-entries page cap")->capture_default_str();
    c_fg->add_option("--initial-size", fg.initial_size, "Entries visible at start (0 = all)");
    c_fg->add_option("--growth", fg.growth, "Entries appended per growth step");
    c_fg->add_option("--growth-every", fg.growth_every, "Growth interval, e.g. 1m");
    c_fg->callback([&] { action = [&](Context& c) { return fixture_gen(c, fg); }; });

    FixtureServerArgs fs;
    auto* c_fs = app.add_subcommand("fixture-server", "Serve a fixture spec over the RFC 6962 HTTP API");
    c_fs->add_option("--spec", fs.spec, "Fixture spec (JSON)")->required();
    c_fs->add_option("--host", fs.host, "Bind address")->capture_default_str();
    c_fs->add_option("--port", fs.port, "Port (0 = ephemeral)")->capture_default_str();
    c_fs->add_option("--port-file", fs.port_file, "Write the bound port to this file");
    c_fs->add_option("--duration", fs.duration, "Stop after this long (default: until interrupted)");
    c_fs->callback([&] { action = [&](Context& c) { return fixture_server(c, fs); }; });

    IngestArgs ig;
    auto* c_ig = app.add_subcommand("ingest-feeds", "Fetch due phishing feeds into the intelligence store");
    c_ig->add_option("--feed", ig.feeds, "Extra feed NAME=SOURCE@URL (source: phishtank, phishstats, openphish, custom, prefixes)");
    c_ig->add_flag("--force", ig.force, "Fetch every feed regardless of schedule");
    c_ig->add_option("--db", ig.db, "Intelligence store path");
    c_ig->callback([&] { action = [&](Context& c) { return ingest_feeds(c, ig); }; });

    BuildDatasetArgs bd;
    auto* c_bd = app.add_subcommand("build-dataset", "Build a labeled, filtered and balanced training dataset");
    c_bd->add_option("--benign-log", bd.benign_log, "Benign log NAME=URL or configured name");
    add_optional(c_bd, "--first", bd.first, "First log index");
    add_optional(c_bd, "--last", bd.last, "End log index (exclusive)");
    c_bd->add_option("--from", bd.from, "Span start (RFC 3339)");
    c_bd->add_option("--to", bd.to, "Span end (RFC 3339)");
    add_optional(c_bd, "--chunk-size", bd.chunk_size, "Entries per chunk");
    add_optional(c_bd, "--gap", bd.gap, "Entries skipped between chunks");
    c_bd->add_option("--phish-urls", bd.phish_urls, "Phishing URLs, one per line, to capture certificates from");
    c_bd->add_option("--phish-certs", bd.phish_certs, "PEM bundle of already collected phishing certificates");
    c_bd->add_option("--connect-host", bd.connect_host, "Connect here instead of resolving URL hosts");
    add_optional(c_bd, "--tls-port", bd.tls_port, "TLS port override");
    c_bd->add_option("--db", bd.db, "Intelligence store path");
    c_bd->add_flag("--no-balance", bd.no_balance, "Keep class sizes as found");
    c_bd->add_option("--seed", bd.seed, "Balancing seed");
    c_bd->add_option("--created-at", bd.created_at, "Dataset timestamp (RFC 3339)");
    c_bd->add_option("--out", bd.out, "Dataset JSONL")->required();
    c_bd->add_option("--report", bd.report, "Write the filter report here");
    c_bd->callback([&] { action = [&](Context& c) { return build_dataset(c, bd); }; });

    TrainArgs tr;
    auto* c_tr = app.add_subcommand("train", "Train a classifier and write the model file");
    c_tr->add_option("--dataset", tr.dataset, "Dataset JSONL");
    c_tr->add_option("--out", tr.out, "Model file")->required();
    c_tr->add_option("--kind", tr.kind, "forest or rules")->capture_default_str();
    c_tr->add_option("--features", tr.features, "all or selected")->capture_default_str();
    c_tr->add_option("--mode", tr.mode, "domain or cert")->capture_default_str();
    c_tr->add_option("--meta", tr.meta, "min, max, avg or med")->capture_default_str();
    c_tr->add_option("--trees", tr.trees, "Number of trees")->capture_default_str();
    c_tr->add_option("--seed", tr.seed, "Training seed")->capture_default_str();
    c_tr->add_option("--threads", tr.threads, "Training threads (0 = all cores)");
    c_tr->add_option("--rules", tr.rules, "Rule set JSON for --kind rules");
    c_tr->callback([&] { action = [&](Context& c) { return train(c, tr); }; });

    ClassifyArgs cl;
    auto* c_cl = app.add_subcommand("classify", "Classify certificates from followed logs or a retrospective range");
    c_cl->add_option("--model", cl.model, "Model file");
    c_cl->add_flag("--live", cl.live, "Follow the logs");
    c_cl->add_flag("--all", cl.all, "Classify the whole stream");
    c_cl->add_option("--from", cl.from, "Span start (RFC 3339)");
    c_cl->add_option("--to", cl.to, "Span end (RFC 3339)");
    add_optional(c_cl, "--first", cl.first, "First log index");
    add_optional(c_cl, "--last", cl.last, "End log index (exclusive)");
    c_cl->add_option("--log", cl.logs, "Log NAME=URL or configured name (repeatable)");
    add_optional(c_cl, "--threshold", cl.threshold, "Decision threshold");
    c_cl->add_option("--hooks", cl.hooks, "Hook file");
    c_cl->add_option("--out", cl.out, "Result file");
    add_optional(c_cl, "--workers", cl.workers, "Classification threads");
    add_optional(c_cl, "--start-index", cl.start_index, "Live: start here when no cursor exists");
    add_optional(c_cl, "--idle-polls", cl.idle_polls, "Live: stop after this many polls without new entries");
    add_optional(c_cl, "--max-polls", cl.max_polls, "Live: stop after this many polls");
    c_cl->add_option("--poll-interval", cl.poll_interval, "Live: delay between polls");
    c_cl->add_option("--cursors", cl.cursors, "Live: cursor file");
    c_cl->add_flag("--no-cursors", cl.no_cursors, "Live: keep cursors in memory only");
    c_cl->add_flag("--verify", cl.verify, "Verify each result against the intelligence store");
    c_cl->add_option("--db", cl.db, "Intelligence store path");
    c_cl->callback([&] { action = [&](Context& c) { return classify(c, cl); }; });

    EvaluateArgs ev;
    auto* c_ev = app.add_subcommand("evaluate", "ROC analysis and thresholds at target false-positive rates");
    c_ev->add_option("--results", ev.results, "Result file");
    c_ev->add_option("--labels", ev.labels, "Labels JSONL (fingerprint, label) or a dataset");
    c_ev->add_option("--model", ev.model, "Model file to score --dataset with");
    c_ev->add_option("--dataset", ev.dataset, "Labeled dataset");
    c_ev->add_option("--target-fpr", ev.targets, "Target FPR (repeatable)");
    c_ev->add_option("--roc", ev.roc, "Write the ROC curve as CSV");
    c_ev->add_flag("--json", ev.json, "JSON output");
    c_ev->add_flag("--print-threshold", ev.print_threshold, "Print only the threshold for the first target");
    c_ev->callback([&] { action = [&](Context& c) { return evaluate(c, ev); }; });

    VerifyArgs vf;
    auto* c_vf = app.add_subcommand("verify", "Check domains or re-verify a result file against the intelligence store");
    c_vf->add_option("--results", vf.results, "Result file to re-verify (appends verdicts)");
    c_vf->add_option("domains", vf.domains, "Domains to check");
    c_vf->add_option("--db", vf.db, "Intelligence store path");
    c_vf->add_flag("--json", vf.json, "JSON output");
    c_vf->callback([&] { action = [&](Context& c) { return verify(c, vf); }; });

    VerifyArgs rv;
    auto* c_rv = app.add_subcommand("reverify", "Re-verify a result file (same as verify --results)");
    c_rv->add_option("results", rv.results, "Result file")->required();
    c_rv->add_option("--db", rv.db, "Intelligence store path");
    c_rv->callback([&] { action = [&](Context& c) { return verify(c, rv); }; });

    ReportArgs rp;
    auto* c_rp = app.add_subcommand("report", "Operating-point report of a result file");
    c_rp->add_option("--results", rp.results, "Result file")->required();
    c_rp->add_option("--labels", rp.labels, "Known labels");
    c_rp->add_option("--target-fpr", rp.targets, "Target FPR (repeatable)");
    add_optional(c_rp, "--threshold", rp.threshold, "Use this threshold for every target");
    c_rp->add_flag("--use-db", rp.use_db, "Also confirm unknown results against the intelligence store");
    c_rp->add_option("--db", rp.db, "Intelligence store path");
    c_rp->add_flag("--json", rp.json, "JSON output");
    c_rp->callback([&] { action = [&](Context& c) { return report(c, rp); }; });

    FeaturesArgs fe;
    auto* c_fe = app.add_subcommand("features", "Export feature vectors as CSV");
    c_fe->add_option("--certs", fe.certs, "PEM bundle");
    c_fe->add_option("--dataset", fe.dataset, "Labeled dataset");
    c_fe->add_option("--set", fe.set, "all or selected")->capture_default_str();
    c_fe->add_option("--mode", fe.mode, "domain or cert")->capture_default_str();
    c_fe->add_option("--model", fe.model, "Take the categorical encoding from this model");
    c_fe->add_option("--out", fe.out, "CSV file (default stdout)");
    c_fe->callback([&] { action = [&](Context& c) { return features(c, fe); }; });

    SelectArgs se;
    auto* c_se = app.add_subcommand("select-features", "Rank features by impurity decrease and pick a subset");
    c_se->add_option("--model", se.model, "All-features forest model")->required();
    add_optional(c_se, "--k", se.k, "Keep the k best features");
    add_optional(c_se, "--min", se.min_importance, "Keep features at or above this importance");
    c_se->add_option("--out", se.out, "Write the selected names here");
    c_se->add_flag("--json", se.json, "JSON output");
    c_se->callback([&] { action = [&](Context& c) { return select_features(c, se); }; });

    ConfigArgs cf;
    auto* c_cf = app.add_subcommand("config", "Print the effective configuration");
    c_cf->add_flag("--keys", cf.keys, "List the keys accepted by --set and CTPHISH_*");
    c_cf->add_option("--write", cf.write, "Also save it to this file");
    c_cf->callback([&] { action = [&](Context& c) { return config_cmd(c, cf); }; });

    auto usage_of = [&]() -> std::string {
        auto subs = app.get_subcommands();
        return subs.empty() ? app.help() : subs.back()->help();
    };

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << usage_of();
        return k_exit_usage;
    }

    Context ctx{out, err, std::nullopt, sets};
    try {
        if (log_level.empty()) {
            const char* env = std::getenv("CTPHISH_LOG_LEVEL");
            log_level = env ? env : "info";
        }
        configure_logging(log_level);
        if (!config_file.empty()) {
            ctx.config_file = config_file;
        } else if (const char* env = std::getenv("CTPHISH_CONFIG"); env && *env) {
            ctx.config_file = env;
        }
        return action(ctx);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n\n" << usage_of();
        return k_exit_usage;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return k_exit_usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return k_exit_error;
    }
}

int run(int argc, char** argv) {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace ctphish::cli
