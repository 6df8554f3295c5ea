#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "ctphish/cli/cli.hpp"
#include "ctphish/ctlog/fixture_server.hpp"
#include "ctphish/data.hpp"
#include "ctphish/dataset/builder.hpp"
#include "ctphish/errors.hpp"
#include "ctphish/evaluate/metrics.hpp"
#include "ctphish/fixtures/corpus.hpp"
#include "ctphish/pipeline/classify.hpp"
#include "ctphish/util/http.hpp"

namespace ctphish::cli {

namespace fs = std::filesystem;
using Overrides = std::vector<std::pair<std::string, std::string>>;

config::PipelineConfig Context::resolve(Overrides extra) const {
    config::LoadOptions o;
    o.file = config_file;
    o.env = config::process_env();
    for (const auto& s : sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--set expects KEY=VALUE, got '" + s + "'");
        o.overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    for (auto& e : extra) o.overrides.push_back(std::move(e));
    return config::load(o);
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void print_json(std::ostream& out, const Json& j) { out << j.dump(2) << "\n" << std::flush; }

ctlog::LogSource parse_log_arg(const std::string& arg, const config::PipelineConfig& cfg) {
    auto eq = arg.find('=');
    if (eq == std::string::npos) {
        for (const auto& l : cfg.logs) {
            if (l.name == arg) return l;
        }
        throw UsageError("unknown log '" + arg + "' (use NAME=URL or a configured name)");
    }
    ctlog::LogSource s{arg.substr(0, eq), arg.substr(eq + 1), std::nullopt};
    if (s.name.empty() || s.base_url.empty()) throw UsageError("--log expects NAME=URL");
    return s;
}

std::vector<ctlog::LogSource> log_sources(const std::vector<std::string>& args, const config::PipelineConfig& cfg) {
    std::vector<ctlog::LogSource> out;
    if (args.empty()) return cfg.logs;
    std::set<std::string> names;
    for (const auto& a : args) {
        out.push_back(parse_log_arg(a, cfg));
        if (!names.insert(out.back().name).second) throw UsageError("log '" + out.back().name + "' given twice");
    }
    return out;
}

ctlog::FetchOptions fetch_options(const config::PipelineConfig& cfg) {
    ctlog::FetchOptions f;
    f.workers = cfg.workers.fetch;
    f.page_size = cfg.chunks.page_size;
    return f;
}

UtcTime time_arg(const std::string& s, const char* flag) {
    try {
        return parse_rfc3339(s);
    } catch (const std::exception&) {
        throw UsageError(std::string(flag) + ": cannot parse time '" + s + "'");
    }
}

std::chrono::milliseconds duration_arg(const std::string& s, const char* flag) {
    try {
        return parse_duration(s);
    } catch (const std::exception&) {
        throw UsageError(std::string(flag) + ": cannot parse duration '" + s + "'");
    }
}

/// fingerprint (hex) -> label, from label lines or dataset lines.
std::map<std::string, evaluate::ItemLabel> load_labels(const std::string& path) {
    std::map<std::string, evaluate::ItemLabel> out;
    std::size_t n = 0;
    for (const auto& line : data::lines(data::read_file(path))) {
        ++n;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::exception& e) {
            throw Error("labels line " + std::to_string(n) + ": " + e.what());
        }
        if (!j.contains("label")) continue;  // dataset header
        std::string fp;
        if (j.contains("fingerprint")) {
            fp = j["fingerprint"].get<std::string>();
        } else if (j.contains("record")) {
            fp = j["record"].at("fingerprint").get<std::string>();
        } else {
            throw Error("labels line " + std::to_string(n) + " has no fingerprint");
        }
        out[fp] = evaluate::item_label_from_string(j["label"].get<std::string>());
    }
    return out;
}

std::vector<cert::CertificateRecord> records_from_pem(const std::string& path) {
    std::vector<cert::CertificateRecord> out;
    for (const auto& der : cert::pem_bundle_to_der(data::read_file(path))) out.push_back(cert::parse_der(der));
    return out;
}

void write_output(Context& ctx, const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        ctx.out << text << std::flush;
    } else {
        data::write_file_atomic(path, text);
    }
}

}  // namespace

int fixture_gen(Context& ctx, const FixtureGenArgs& a) {
    fixtures::CorpusOptions opt;
    opt.benign = a.benign;
    opt.phish = a.phish;
    opt.seed = a.seed;
    opt.precert_every = a.precert_every;
    fixtures::CertFactory factory;
    auto corpus = fixtures::generate_corpus(opt, factory);
    fixtures::write_corpus(corpus, a.out_dir, a.log_name, a.precert_every);

    const auto spec_path = (fs::path(a.out_dir) / "fixture.json").string();
    Json spec = Json::parse(data::read_file(spec_path));
    auto& log = spec["logs"][0];
    if (a.page_size != 256) log["page_size"] = a.page_size;
    if (a.initial_size) log["initial_size"] = a.initial_size;
    if (a.growth) {
        if (a.growth_every.empty()) throw UsageError("--growth needs --growth-every");
        duration_arg(a.growth_every, "--growth-every");
        log["growth"] = {{"entries", a.growth}, {"every", a.growth_every}};
    }
    data::write_file_atomic(spec_path, spec.dump(2) + "\n");
    print_json(ctx.out, {{"dir", a.out_dir},
                         {"spec", spec_path},
                         {"log", a.log_name},
                         {"certificates", corpus.certs.size()},
                         {"phish", corpus.phish_urls.size()},
                         {"feed", (fs::path(a.out_dir) / "feed.txt").string()},
                         {"labels", (fs::path(a.out_dir) / "labels.jsonl").string()}});
    return k_exit_ok;
}

int fixture_server(Context& ctx, const FixtureServerArgs& a) {
    auto logs = ctlog::load_fixture_spec(a.spec);
    std::vector<std::string> names;
    for (const auto& l : logs) names.push_back(l.name);
    ctlog::FixtureServer server(std::move(logs));
    int port = server.start(a.host, a.port);
    for (const auto& n : names) {
        ctx.out << n << " " << server.base_url(n) << " size=" << server.tree_size(n) << "\n";
    }
    ctx.out << std::flush;
    if (!a.port_file.empty()) data::write_file_atomic(a.port_file, std::to_string(port) + "\n");
    std::optional<std::chrono::steady_clock::time_point> until;
    if (!a.duration.empty()) until = std::chrono::steady_clock::now() + duration_arg(a.duration, "--duration");
    while (!stop_flag().load()) {
        if (until && std::chrono::steady_clock::now() >= *until) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    server.stop();
    return k_exit_ok;
}

int ingest_feeds(Context& ctx, const IngestArgs& a) {
    Overrides o;
    if (!a.db.empty()) o.emplace_back("paths.intel_db", a.db);
    auto cfg = ctx.resolve(o);
    auto feeds = cfg.feeds;
    for (const auto& f : a.feeds) {
        auto eq = f.find('=');
        auto at = f.find('@', eq == std::string::npos ? 0 : eq);
        if (eq == std::string::npos || at == std::string::npos) throw UsageError("--feed expects NAME=SOURCE@URL");
        intel::FeedDefinition d;
        d.name = f.substr(0, eq);
        std::string src = f.substr(eq + 1, at - eq - 1);
        d.url = f.substr(at + 1);
        if (src != "prefixes") {
            try {
                d.source = intel::feed_source_from_string(src);
            } catch (const std::exception& e) {
                throw UsageError(std::string("--feed: ") + e.what());
            }
        }
        feeds.erase(std::remove_if(feeds.begin(), feeds.end(), [&](const auto& x) { return x.name == d.name; }),
                    feeds.end());
        feeds.push_back(d);
    }
    if (feeds.empty()) throw UsageError("no feeds configured; pass --feed NAME=SOURCE@URL");
    intel::IntelStore store(cfg.intel_db());
    auto timeout = cfg.retry.request_timeout;
    auto reports = intel::run_feeds(store, feeds, cfg.schedule(), utc_now(), a.force,
                                    [&](const std::string& url) { return fetch_url(url, timeout); });
    Json out = Json::array();
    bool failed = false;
    for (const auto& r : reports) {
        out.push_back({{"feed", r.name},
                       {"fetched", r.fetched},
                       {"new_entries", r.new_entries},
                       {"duplicates", r.duplicates},
                       {"malformed", r.malformed},
                       {"prefixes_added", r.prefixes_added},
                       {"error", r.error}});
        failed = failed || !r.error.empty();
    }
    print_json(ctx.out, {{"db", cfg.intel_db()}, {"entries", store.entry_count()}, {"feeds", out}});
    return failed ? k_exit_error : k_exit_ok;
}

int build_dataset(Context& ctx, const BuildDatasetArgs& a) {
    Overrides o;
    if (!a.db.empty()) o.emplace_back("paths.intel_db", a.db);
    if (a.chunk_size) o.emplace_back("chunks.chunk_size", std::to_string(*a.chunk_size));
    if (a.gap) o.emplace_back("chunks.gap", std::to_string(*a.gap));
    auto cfg = ctx.resolve(o);
    if (a.phish_urls.empty() && a.phish_certs.empty()) {
        throw UsageError("build-dataset needs --phish-urls or --phish-certs");
    }
    ctlog::LogSource src;
    if (!a.benign_log.empty()) {
        src = parse_log_arg(a.benign_log, cfg);
    } else if (!cfg.logs.empty()) {
        src = cfg.logs.front();
    } else {
        throw UsageError("build-dataset needs --benign-log or a configured log");
    }
    if ((a.from.empty()) != (a.to.empty())) throw UsageError("--from and --to go together");

    ctlog::LogClient client(src, cfg.retry.policy());
    ctlog::ChunkPlan plan;
    if (!a.from.empty()) {
        plan = ctlog::plan_chunks(client, cfg.chunks.chunk_size, cfg.chunks.gap,
                                  {time_arg(a.from, "--from"), time_arg(a.to, "--to")});
    } else {
        std::uint64_t size = client.get_sth().tree_size;
        std::uint64_t first = a.first.value_or(0), last = std::min(a.last.value_or(size), size);
        if (first > last) throw UsageError("--first is past --last");
        plan = ctlog::plan_chunks(first, last, cfg.chunks.chunk_size, cfg.chunks.gap);
    }

    intel::IntelStore store(cfg.intel_db());
    auto snapshot = store.snapshot();
    auto filters = dataset::FilterLists::load(cfg.filters.benign_services, cfg.filters.popular_domains,
                                              cfg.filters.malicious_domains);
    dataset::BenignSource bsrc{src, cfg.retry.policy(), fetch_options(cfg)};
    auto benign = dataset::build_benign(plan, bsrc, filters, snapshot);

    std::vector<cert::CertificateRecord> phish;
    Json tls = Json::object();
    if (!a.phish_certs.empty()) {
        for (auto& r : records_from_pem(a.phish_certs)) phish.push_back(std::move(r));
    }
    if (!a.phish_urls.empty()) {
        auto urls = data::lines(data::read_file(a.phish_urls));
        dataset::TlsFetchOptions topt;
        topt.connect_host = a.connect_host;
        topt.port = a.tls_port;
        topt.timeout = std::min<std::chrono::milliseconds>(cfg.retry.request_timeout, std::chrono::seconds(10));
        auto fetched = dataset::fetch_malicious_certs(urls, topt, cfg.workers.tls);
        std::map<std::string, std::size_t> failures;
        std::size_t captured = 0;
        for (auto& f : fetched) {
            if (f.record) {
                phish.push_back(std::move(*f.record));
                ++captured;
            } else {
                ++failures[f.failure];
            }
        }
        tls = {{"urls", urls.size()}, {"captured", captured}, {"failures", failures}};
    }
    auto malicious = dataset::filter_malicious(std::move(phish), filters);

    dataset::AssembleOptions aopt;
    aopt.balance = !a.no_balance;
    aopt.seed = a.seed;
    aopt.created_at = a.created_at.empty() ? utc_now() : time_arg(a.created_at, "--created-at");
    auto ds = dataset::assemble(benign.records, malicious.records, aopt);
    dataset::save_dataset(a.out, ds);

    Json rep = {{"benign", benign.report.to_json()},
                {"malicious", malicious.report.to_json()},
                {"tls", tls},
                {"chunks", plan.chunks.size()},
                {"dataset",
                 {{"path", a.out},
                  {"benign", ds.count(dataset::Label::benign)},
                  {"phish", ds.count(dataset::Label::phish)},
                  {"hash", dataset::dataset_hash(ds)}}}};
    if (!a.report.empty()) data::write_file_atomic(a.report, rep.dump(2) + "\n");
    print_json(ctx.out, rep);
    return k_exit_ok;
}

int train(Context& ctx, const TrainArgs& a) {
    classifiers::TrainedModel model = [&] {
        if (a.kind == "rules") {
            if (a.rules.empty()) return classifiers::TrainedModel::from_rules(classifiers::RuleSet::bundled());
            return classifiers::TrainedModel::from_rules(
                classifiers::RuleSet::from_json(Json::parse(data::read_file(a.rules))));
        }
        if (a.kind != "forest") throw UsageError("--kind must be forest or rules");
        if (a.dataset.empty()) throw UsageError("train --kind forest needs --dataset");
        classifiers::TrainOptions opt;
        try {
            opt.feature_set = features::feature_set_from_string(a.features);
            opt.mode = classifiers::mode_from_string(a.mode);
            opt.meta = classifiers::meta_from_string(a.meta);
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
        opt.n_trees = a.trees;
        opt.seed = a.seed;
        opt.threads = a.threads;
        return classifiers::train_forest(dataset::load_dataset(a.dataset), opt);
    }();
    model.save(a.out);
    Json j = model.to_json();
    print_json(ctx.out, {{"model", a.out}, {"name", model.name()}, {"kind", j["kind"]}, {"manifest", j["manifest"]}});
    return k_exit_ok;
}

int classify(Context& ctx, const ClassifyArgs& a) {
    Overrides o;
    if (!a.model.empty()) o.emplace_back("model", a.model);
    if (a.threshold) o.emplace_back("threshold", fmt_double(*a.threshold));
    if (!a.hooks.empty()) o.emplace_back("paths.hooks", a.hooks);
    if (!a.out.empty()) o.emplace_back("paths.results", a.out);
    if (a.workers) o.emplace_back("workers.classify", std::to_string(*a.workers));
    if (!a.poll_interval.empty()) o.emplace_back("poll_interval", a.poll_interval);
    if (!a.cursors.empty()) o.emplace_back("paths.cursors", a.cursors);
    if (!a.db.empty()) o.emplace_back("paths.intel_db", a.db);
    auto cfg = ctx.resolve(o);
    if (cfg.model.empty()) throw UsageError("classify requires --model");
    const bool range = a.all || !a.from.empty() || !a.to.empty() || a.first || a.last;
    if (a.live == range) throw UsageError("choose either --live or a range (--from/--to, --first/--last, --all)");
    if (a.from.empty() != a.to.empty()) throw UsageError("--from and --to go together");
    auto sources = log_sources(a.logs, cfg);
    if (sources.empty()) throw UsageError("no logs configured; pass --log NAME=URL");

    auto scorer = classifiers::load_scorer(cfg.model);
    std::unique_ptr<pipeline::HookDispatcher> hooks;
    if (!cfg.paths.hooks.empty()) {
        hooks = std::make_unique<pipeline::HookDispatcher>(pipeline::load_hooks(cfg.paths.hooks), cfg.workers.hooks);
    }
    std::optional<intel::IntelSnapshot> snapshot;
    std::optional<intel::Verifier> verifier;
    if (a.verify) {
        intel::IntelStore store(cfg.intel_db());
        snapshot = store.snapshot();
        verifier.emplace(*snapshot);
    }

    pipeline::ClassifyOptions opt;
    opt.threshold = cfg.threshold;
    opt.workers = cfg.workers.classify;
    opt.retry = cfg.retry.policy();
    opt.fetch = fetch_options(cfg);
    opt.hooks = hooks.get();
    opt.verifier = verifier ? &*verifier : nullptr;
    opt.stop = &stop_flag();

    Json summary;
    if (a.live) {
        pipeline::ResultStore store(cfg.results());
        std::unique_ptr<ctlog::CursorStore> cursors;
        if (!a.no_cursors) cursors = std::make_unique<ctlog::CursorStore>(cfg.cursors());
        std::vector<pipeline::StreamSource> streams;
        for (const auto& s : sources) {
            pipeline::StreamSource ss;
            ss.log = s;
            ss.cursors = cursors.get();
            ss.follow.poll_interval = cfg.poll_interval;
            ss.follow.fetch = opt.fetch;
            ss.follow.start_index = a.start_index;
            ss.follow.idle_polls = a.idle_polls;
            ss.follow.max_polls = a.max_polls;
            streams.push_back(ss);
        }
        auto st = pipeline::classify_stream(streams, *scorer, opt,
                                             [&](const pipeline::ClassificationResult& r) { store.append(r); });
        summary = {{"mode", "live"}, {"results", cfg.results()}, {"stats", st.to_json()}};
    } else {
        pipeline::RangeSpec rs;
        rs.chunk_size = cfg.chunks.chunk_size;
        if (!a.from.empty()) rs.span = ctlog::TimeSpan{time_arg(a.from, "--from"), time_arg(a.to, "--to")};
        if (a.first || a.last) rs.indices = {{a.first.value_or(0), a.last.value_or(UINT64_MAX)}};
        auto run = pipeline::classify_range(sources, rs, *scorer, opt);
        pipeline::write_results(cfg.results(), run.results);
        Json ranges = Json::object();
        for (const auto& [log, r] : run.ranges) ranges[log] = {r.first, r.second};
        summary = {{"mode", "range"}, {"results", cfg.results()}, {"ranges", ranges}, {"stats", run.stats.to_json()}};
    }
    if (hooks) {
        hooks->drain();
        std::map<std::string, std::size_t> by_status;
        for (const auto& h : hooks->outcomes()) ++by_status[std::string(pipeline::to_string(h.status))];
        summary["hooks"] = by_status;
    }
    summary["classifier"] = scorer->name();
    summary["threshold"] = cfg.threshold;
    print_json(ctx.out, summary);
    return k_exit_ok;
}

int evaluate(Context& ctx, const EvaluateArgs& a) {
    auto cfg = ctx.resolve();
    evaluate::ScoredSet set;
    std::string name;
    if (!a.results.empty()) {
        if (a.labels.empty()) throw UsageError("evaluate --results needs --labels");
        auto labels = load_labels(a.labels);
        for (const auto& r : pipeline::load_results(a.results)) {
            auto id = to_hex(r.fingerprint);
            auto it = labels.find(id);
            set.items.push_back({r.score, it == labels.end() ? evaluate::ItemLabel::unknown : it->second, id, r.domains});
            name = r.classifier;
        }
    } else if (!a.model.empty() && !a.dataset.empty()) {
        auto scorer = classifiers::load_scorer(a.model);
        name = scorer->name();
        for (const auto& lr : dataset::load_dataset(a.dataset).records) {
            set.items.push_back({scorer->score_record(lr.record).score,
                                 lr.label == dataset::Label::phish ? evaluate::ItemLabel::phish : evaluate::ItemLabel::benign,
                                 to_hex(lr.record.fingerprint), lr.record.domains()});
        }
    } else {
        throw UsageError("evaluate needs --results with --labels, or --model with --dataset");
    }
    auto targets = a.targets.empty() ? cfg.target_fprs : a.targets;
    auto points = evaluate::roc(set);
    if (!a.roc.empty()) data::write_file_atomic(a.roc, evaluate::roc_csv(points));

    Json ops = Json::array();
    std::vector<double> thresholds;
    for (double t : targets) {
        double th;
        try {
            th = evaluate::threshold_at_fpr(set, t);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        thresholds.push_back(th);
        auto c = evaluate::confusion_at(set, th);
        ops.push_back({{"target_fpr", t}, {"threshold", th}, {"tp", c.tp}, {"fp", c.fp}, {"tpr", c.tpr()}, {"fpr", c.fpr()}});
    }
    if (a.print_threshold) {
        ctx.out << fmt_double(thresholds.front()) << "\n" << std::flush;
        return k_exit_ok;
    }
    Json j = {{"classifier", name},
              {"items", set.items.size()},
              {"positives", set.positives()},
              {"negatives", set.negatives()},
              {"roc_points", points.size()},
              {"operating_points", ops}};
    if (a.json) {
        print_json(ctx.out, j);
    } else {
        ctx.out << name << ": " << set.positives() << " positives, " << set.negatives() << " negatives\n";
        for (const auto& op : ops) {
            ctx.out << "  target FPR " << op["target_fpr"].get<double>() << ": threshold "
                    << fmt_double(op["threshold"].get<double>()) << ", TPR " << op["tpr"].get<double>() << ", FP "
                    << op["fp"].get<std::size_t>() << "\n";
        }
        ctx.out << std::flush;
    }
    return k_exit_ok;
}

int verify(Context& ctx, const VerifyArgs& a) {
    Overrides o;
    if (!a.db.empty()) o.emplace_back("paths.intel_db", a.db);
    auto cfg = ctx.resolve(o);
    if (a.results.empty() == a.domains.empty()) throw UsageError("verify needs either --results or domains");
    intel::IntelStore store(cfg.intel_db());
    auto snapshot = store.snapshot();
    intel::Verifier verifier(snapshot);
    if (!a.results.empty()) {
        if (!fs::exists(a.results)) throw StoreError("no result file " + a.results);
        pipeline::ResultStore rs(a.results);
        pipeline::ReverifyReport rep;
        auto results = pipeline::reverify(rs, verifier, utc_now(), &rep);
        print_json(ctx.out, {{"results", a.results},
                             {"intel_entries", snapshot.entry_count()},
                             {"checked", rep.checked},
                             {"confirmed", rep.confirmed},
                             {"newly_confirmed", rep.newly_confirmed}});
        return k_exit_ok;
    }
    Json out = Json::array();
    for (const auto& d : a.domains) {
        auto verdict = verifier.verify({d});
        if (a.json) {
            out.push_back({{"domain", d}, {"verdict", intel::to_string(verdict)}});
        } else {
            ctx.out << d << " " << intel::to_string(verdict) << "\n";
        }
    }
    if (a.json) print_json(ctx.out, out);
    return k_exit_ok;
}

int report(Context& ctx, const ReportArgs& a) {
    Overrides o;
    if (!a.db.empty()) o.emplace_back("paths.intel_db", a.db);
    auto cfg = ctx.resolve(o);
    auto results = pipeline::load_results(a.results);
    std::map<std::string, evaluate::ItemLabel> labels;
    if (!a.labels.empty()) labels = load_labels(a.labels);

    evaluate::ClassifierResults cr;
    std::set<std::string> confirmed;
    for (const auto& r : results) {
        auto id = to_hex(r.fingerprint);
        auto it = labels.find(id);
        cr.set.items.push_back({r.score, it == labels.end() ? evaluate::ItemLabel::unknown : it->second, id, r.domains});
        if (r.confirmed()) confirmed.insert(id);
        cr.name = r.classifier;
    }
    auto targets = a.targets.empty() ? cfg.target_fprs : a.targets;
    if (a.threshold) {
        for (double t : targets) cr.thresholds[t] = *a.threshold;
    }
    std::optional<intel::IntelSnapshot> snapshot;
    std::optional<intel::Verifier> verifier;
    if (a.use_db) {
        intel::IntelStore store(cfg.intel_db());
        snapshot = store.snapshot();
        verifier.emplace(*snapshot);
    }
    auto rep = evaluate::report({cr}, targets, [&](const evaluate::ScoredItem& item) {
        if (confirmed.contains(item.id)) return true;
        return verifier && verifier->verify(item.domains) == intel::Verdict::confirmed_phish;
    });
    if (a.json) {
        print_json(ctx.out, rep.to_json());
    } else {
        ctx.out << rep.to_text() << std::flush;
    }
    return k_exit_ok;
}

int features(Context& ctx, const FeaturesArgs& a) {
    if (a.certs.empty() == a.dataset.empty()) throw UsageError("features needs exactly one of --certs or --dataset");
    std::vector<cert::CertificateRecord> records;
    std::vector<std::string> record_labels;
    if (!a.certs.empty()) {
        records = records_from_pem(a.certs);
    } else {
        for (const auto& lr : dataset::load_dataset(a.dataset).records) {
            records.push_back(lr.record);
            record_labels.emplace_back(dataset::to_string(lr.label));
        }
    }
    features::FeatureSet set;
    classifiers::Mode mode;
    try {
        set = features::feature_set_from_string(a.set);
        mode = classifiers::mode_from_string(a.mode);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    auto codec = a.model.empty() ? features::CategoricalCodec::fit(records)
                                 : classifiers::TrainedModel::load(a.model).codec();
    features::FeatureExtractor ex(codec);
    std::vector<features::FeatureVector> rows;
    std::vector<std::string> row_labels;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (mode == classifiers::Mode::cert) {
            rows.push_back(ex.cert_vector(records[i], set));
            if (!record_labels.empty()) row_labels.push_back(record_labels[i]);
        } else {
            for (auto& v : ex.per_domain(records[i], set)) {
                rows.push_back(std::move(v));
                if (!record_labels.empty()) row_labels.push_back(record_labels[i]);
            }
        }
    }
    write_output(ctx, a.out, features::to_csv(rows, record_labels.empty() ? nullptr : &row_labels));
    return k_exit_ok;
}

int select_features(Context& ctx, const SelectArgs& a) {
    if (a.k && a.min_importance) throw UsageError("use either --k or --min");
    auto model = classifiers::TrainedModel::load(a.model);
    auto ranking = classifiers::mdi_ranking(model);
    std::vector<std::size_t> chosen;
    if (a.k) {
        chosen = classifiers::mdi_selection(model, *a.k);
    } else if (a.min_importance) {
        chosen = classifiers::mdi_selection_above(model, *a.min_importance);
    } else {
        chosen = classifiers::mdi_selection(model, features::k_selected_features);
    }
    std::set<std::size_t> in(chosen.begin(), chosen.end());
    if (!a.out.empty()) {
        std::string text;
        for (auto i : chosen) text += features::catalog()[i].name + "\n";
        data::write_file_atomic(a.out, text);
    }
    if (a.json) {
        Json rows = Json::array();
        for (const auto& e : ranking) {
            rows.push_back({{"index", e.index}, {"name", e.name}, {"importance", e.importance}, {"selected", in.contains(e.index)}});
        }
        print_json(ctx.out, {{"selected", chosen.size()}, {"ranking", rows}});
    } else {
        std::size_t rank = 0;
        for (const auto& e : ranking) {
            char line[160];
            std::snprintf(line, sizeof line, "%3zu %c %-40s %.6f\n", ++rank, in.contains(e.index) ? '*' : ' ',
                          e.name.c_str(), e.importance);
            ctx.out << line;
        }
        ctx.out << std::flush;
    }
    return k_exit_ok;
}

int config_cmd(Context& ctx, const ConfigArgs& a) {
    if (a.keys) {
        for (const auto& k : config::scalar_keys()) ctx.out << k << "\n";
        ctx.out << std::flush;
        return k_exit_ok;
    }
    auto cfg = ctx.resolve();
    if (!a.write.empty()) config::save_file(cfg, a.write);
    print_json(ctx.out, config::to_json(cfg));
    return k_exit_ok;
}

}  // namespace ctphish::cli
