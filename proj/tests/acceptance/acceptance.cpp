// One PASS/FAIL line per acceptance criterion; exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "ctphish/classifiers/model.hpp"
#include "ctphish/cli/cli.hpp"
#include "ctphish/ctlog/fixture_server.hpp"
#include "ctphish/data.hpp"
#include "ctphish/dataset/builder.hpp"
#include "ctphish/evaluate/metrics.hpp"
#include "ctphish/features/extractor.hpp"
#include "ctphish/features/lexical.hpp"
#include "ctphish/fixtures/corpus.hpp"
#include "ctphish/intel/store.hpp"
#include "ctphish/pipeline/result.hpp"
#include "support/fixture_helpers.hpp"
#include "support/lexical_oracle.hpp"
#include "support/roc_oracle.hpp"
#include "support/sha256_oracle.hpp"
#include "support/synthetic.hpp"
#include "support/golden_values.hpp"

using namespace ctphish;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void expect(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (notes.size() < 8) notes.push_back(what);
        }
    }
};

using Criterion = std::function<void(Outcome&)>;

fs::path workdir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("ctphish_acceptance_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// --- 1 -------------------------------------------------------------------

bool same_5dp(double got, double expected) { return std::llround(got * 1e5) == std::llround(expected * 1e5); }

void golden_values(Outcome& o) {
    auto values = [](const fixtures::CertSpec& spec) {
        auto r = testfx::record_of(spec);
        features::FeatureExtractor ex(features::CategoricalCodec::fit(std::span(&r, 1)));
        return ex.per_domain(r, features::FeatureSet::all).front().values;
    };
    auto c0 = values(testfx::netflix_spec());
    auto c1 = values(testfx::paypal_spec());
    auto check = [&](const std::vector<testfx::GoldenRow>& rows) {
        for (const auto& row : rows) {
            auto i = features::feature_index(row.feature);
            if (!i) {
                o.expect(false, "unknown feature " + std::string(row.feature));
                continue;
            }
            o.expect(same_5dp(c0[*i], row.c0), std::string(row.feature) + " c0=" + fmt(c0[*i]));
            o.expect(same_5dp(c1[*i], row.c1), std::string(row.feature) + " c1=" + fmt(c1[*i]));
        }
    };
    check(testfx::golden_domain_rows());
    check(testfx::golden_cert_rows());
}

// --- 2 -------------------------------------------------------------------

void ngram_oracle(Outcome& o) {
    std::mt19937_64 rng(2024);
    static constexpr std::string_view alphabet = "abcdefghijklmnopqrstuvwxyz0123456789-._";
    std::uniform_int_distribution<std::size_t> len(1, 60), pick(0, alphabet.size() - 1);
    for (int i = 0; i < 1000; ++i) {
        std::string s(len(rng), 'a');
        for (auto& c : s) c = alphabet[pick(rng)];
        for (std::size_t n = 1; n <= 3; ++n) {
            auto st = features::ngram_stats(s, n);
            auto ref = oracle::ngram_stats(s, n);
            std::array<double, 7> got{st.std, st.median, st.mean, st.min, st.max, st.bottom_quartile, st.top_quartile};
            for (std::size_t k = 0; k < 7; ++k)
                o.expect(std::abs(got[k] - ref[k]) <= 1e-9, s + " n=" + std::to_string(n) + " stat " + std::to_string(k));
        }
        o.expect(std::abs(features::shannon_entropy(s) - oracle::entropy(s)) <= 1e-9, "entropy " + s);
    }
}

// --- 3 -------------------------------------------------------------------

void meta_laws(Outcome& o) {
    using classifiers::Meta;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    std::uniform_int_distribution<int> len(1, 50);
    for (int i = 0; i < 10000; ++i) {
        std::vector<double> s(static_cast<std::size_t>(len(rng)));
        for (auto& x : s) x = u(rng);
        double mn = classifiers::combine_meta(s, Meta::min), mx = classifiers::combine_meta(s, Meta::max);
        double av = classifiers::combine_meta(s, Meta::avg), md = classifiers::combine_meta(s, Meta::med);
        o.expect(mn <= md && md <= mx, "min <= med <= max");
        o.expect(mn <= av && av <= mx, "min <= avg <= max");
        auto t = s;
        std::shuffle(t.begin(), t.end(), rng);
        for (auto m : {Meta::min, Meta::max, Meta::avg, Meta::med})
            o.expect(classifiers::combine_meta(t, m) == classifiers::combine_meta(s, m), "permutation invariance");
        std::vector<double> one{s[0]};
        for (auto m : {Meta::min, Meta::max, Meta::avg, Meta::med})
            o.expect(classifiers::combine_meta(one, m) == s[0], "singleton agreement");
    }
}

// --- 4 -------------------------------------------------------------------

void roc_oracle(Outcome& o) {
    using namespace evaluate;
    std::mt19937_64 rng(404);
    std::uniform_int_distribution<std::size_t> size(2, 1000);
    std::uniform_int_distribution<int> grid(0, 50);
    std::bernoulli_distribution coin(0.45), coarse(0.5);
    std::uniform_real_distribution<double> u(0, 1), target(0.0005, 0.5);
    for (int k = 0; k < 200; ++k) {
        ScoredSet s;
        bool use_grid = coarse(rng);
        std::size_t n = size(rng);
        for (std::size_t i = 0; i < n; ++i) {
            double score = use_grid ? grid(rng) / 50.0 : u(rng);
            s.add(score, coin(rng) ? ItemLabel::phish : (coin(rng) ? ItemLabel::unknown : ItemLabel::benign));
        }
        s.items[0].label = ItemLabel::phish;
        s.items[1].label = ItemLabel::benign;
        std::string tag = "set " + std::to_string(k);
        o.expect(roc(s) == oracle::roc(s), tag + ": roc differs");
        double t = target(rng);
        double th = threshold_at_fpr(s, t);
        o.expect(th == oracle::threshold_at_fpr(s, t), tag + ": threshold differs");
        o.expect(confusion_at(s, th).fpr() <= t, tag + ": budget exceeded");
        double below = -1;
        for (const auto& item : s.items)
            if (item.score < th) below = std::max(below, item.score);
        if (below >= 0) o.expect(confusion_at(s, below).fpr() > t, tag + ": not tight");
    }
}

// --- 5 -------------------------------------------------------------------

void forest_sanity(Outcome& o) {
    using classifiers::RandomForest;
    classifiers::ForestParams p;
    p.n_trees = 200;
    p.seed = 17;
    auto train = testfx::gaussian_blobs(1000, 4.0, 0, 71);
    auto hold = testfx::gaussian_blobs(500, 4.0, 0, 72);
    auto forest = RandomForest::train(train.x, train.y, p);
    double tr = testfx::accuracy(forest, train), ho = testfx::accuracy(forest, hold);
    o.expect(tr >= 0.99, "train accuracy " + fmt(tr));
    o.expect(ho >= 0.95, "holdout accuracy " + fmt(ho));
    o.expect(RandomForest::train(train.x, train.y, p).to_json().dump() == forest.to_json().dump(),
             "same seed gave a different model");

    auto noisy = testfx::gaussian_blobs(1000, 4.0, 8, 73);
    auto f2 = RandomForest::train(noisy.x, noisy.y, p);
    auto imp = f2.feature_importances();
    double sum = 0;
    for (double v : imp) sum += v;
    o.expect(std::abs(sum - 1.0) <= 1e-9, "MDI sum " + fmt(sum));
    o.expect(imp.size() == 10 && imp[0] + imp[1] > 0.8, "informative share " + fmt(imp[0] + imp[1]));
}

// --- 6 -------------------------------------------------------------------

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
    std::vector<std::string> full{"--log-level", "warn", "--set", "paths.data_dir=" + (workdir() / "data").string()};
    full.insert(full.end(), args.begin(), args.end());
    std::ostringstream out, err;
    int code = cli::run(full, out, err);
    return {code, out.str(), err.str()};
}

void end_to_end(Outcome& o) {
    auto step = [&](const std::string& name, std::vector<std::string> args) {
        auto r = run_cli(std::move(args));
        o.expect(r.code == 0, name + " exited " + std::to_string(r.code) + ": " + r.err.substr(0, 200));
        return r;
    };
    auto main_dir = (workdir() / "live").string(), val_dir = (workdir() / "validation").string();
    step("fixture-gen", {"fixture-gen", "--out", main_dir, "--benign", "9950", "--phish", "50", "--seed", "1"});
    step("fixture-gen", {"fixture-gen", "--out", val_dir, "--benign", "9950", "--phish", "50", "--seed", "2"});
    if (!o.pass) return;

    auto logs = ctlog::load_fixture_spec(main_dir + "/fixture.json");
    logs[0].name = "live";
    auto vlogs = ctlog::load_fixture_spec(val_dir + "/fixture.json");
    vlogs[0].name = "validation";
    logs.push_back(vlogs[0]);
    ctlog::FixtureServer server(logs);
    server.start();

    auto model = (workdir() / "rules.json").string();
    step("train", {"train", "--kind", "rules", "--out", model});
    auto val_results = (workdir() / "validation.jsonl").string();
    step("classify validation",
         {"classify", "--model", model, "--all", "--log", "validation=" + server.base_url("validation"), "--out", val_results});
    auto th = step("evaluate", {"evaluate", "--results", val_results, "--labels", val_dir + "/labels.jsonl",
                                "--target-fpr", "0.001", "--print-threshold"});
    if (!o.pass) return;
    std::string threshold = data::lines(th.out).at(0);

    auto db = (workdir() / "intel.sqlite").string();
    step("ingest-feeds", {"ingest-feeds", "--db", db, "--feed", "openphish=openphish@" + main_dir + "/feed.txt"});
    auto results = (workdir() / "live.jsonl").string();
    step("classify --live", {"classify", "--model", model, "--live", "--log", "live=" + server.base_url("live"),
                             "--threshold", threshold, "--start-index", "0", "--idle-polls", "1", "--poll-interval",
                             "100ms", "--no-cursors", "--workers", "4", "--out", results});
    step("reverify", {"reverify", results, "--db", db});
    server.stop();
    if (!o.pass) return;

    std::set<std::string> planted;
    for (const auto& line : data::lines(data::read_file(main_dir + "/labels.jsonl"))) {
        auto j = Json::parse(line);
        if (j["label"] == "phish") planted.insert(j["fingerprint"].get<std::string>());
    }
    std::size_t tp = 0, fp = 0, unconfirmed = 0, seen = 0;
    for (const auto& r : pipeline::load_results(results)) {
        ++seen;
        if (r.predicted != dataset::Label::phish) continue;
        if (planted.count(to_hex(r.fingerprint))) {
            ++tp;
            if (!r.confirmed()) ++unconfirmed;
        } else {
            ++fp;
        }
    }
    o.expect(seen == 10000, "results " + std::to_string(seen));
    o.expect(tp >= 45, "flagged planted " + std::to_string(tp));
    o.expect(fp <= 10, "false positives " + std::to_string(fp));
    o.expect(unconfirmed == 0, "unconfirmed planted " + std::to_string(unconfirmed));
    o.notes.push_back("threshold " + threshold + ", tp " + std::to_string(tp) + ", fp " + std::to_string(fp));
}

// --- 7 -------------------------------------------------------------------

fixtures::CertSpec host_spec(const std::string& host, std::uint64_t serial) {
    fixtures::CertSpec s;
    s.subject = {{"CN", host}};
    s.dns_sans = {host, "www." + host};
    s.serial = serial;
    return s;
}

intel::HashPrefix oracle_prefix(const std::string& expr) {
    auto d = oracle::sha256(expr);
    return {d[0], d[1], d[2], d[3]};
}

void filtering_accounting(Outcome& o) {
    using dataset::DropReason;
    // Benign side: 975 distinct certificates, 20 repeats, 5 undecodable entries.
    auto host = [](std::size_t i) { return "node" + std::to_string(i) + ".bench" + std::to_string(i) + ".net"; };
    std::vector<ctlog::FixtureCert> certs;
    for (std::size_t i = 0; i < 975; ++i) certs.push_back({testfx::factory().make_der(host_spec(host(i), 5000 + i)), false});
    for (std::size_t i = 0; i < 20; ++i) certs.push_back(certs[i]);
    for (std::size_t i = 0; i < 5; ++i) certs.push_back({Bytes{0x30, 0x03, 0x02, 0x01, static_cast<std::uint8_t>(i)}, false});

    std::vector<intel::IntelEntry> entries;
    for (std::size_t i = 100; i < 115; ++i)
        entries.push_back(*intel::make_entry("http://" + host(i) + "/signin", intel::FeedSource::openphish, utc_now()));
    intel::PrefixSet prefixes;
    for (std::size_t i = 200; i < 212; ++i) prefixes.insert(oracle_prefix(host(i) + "/"));
    intel::IntelSnapshot snap(entries, prefixes);
    auto lists = dataset::FilterLists::bundled();
    for (std::size_t i = 300; i < 308; ++i) lists.malicious_domains.insert("bench" + std::to_string(i) + ".net");

    ctlog::FixtureLog log;
    log.name = "benign";
    log.certs = certs;
    ctlog::FixtureServer server({log});
    server.start();
    dataset::BenignSource src;
    src.log = {"benign", server.base_url("benign")};
    auto out = dataset::build_benign(ctlog::plan_chunks(0, 1000, 250, 0), src, lists, snap);
    server.stop();

    auto& r = out.report;
    auto count = [&](DropReason d) { return r.drops.count(d) ? r.drops.at(d) : 0; };
    o.expect(r.input == 1000, "benign input " + std::to_string(r.input));
    o.expect(r.balanced(), "benign report unbalanced");
    o.expect(count(DropReason::parse_error) == 5, "parse_error " + std::to_string(count(DropReason::parse_error)));
    o.expect(count(DropReason::duplicate) == 20, "duplicate " + std::to_string(count(DropReason::duplicate)));
    o.expect(count(DropReason::phishing_db) == 15, "phishing_db " + std::to_string(count(DropReason::phishing_db)));
    o.expect(count(DropReason::prefix) == 12, "prefix " + std::to_string(count(DropReason::prefix)));
    o.expect(count(DropReason::malicious_list) == 8, "malicious_list " + std::to_string(count(DropReason::malicious_list)));
    o.expect(r.output == 940 && out.records.size() == 940, "benign output " + std::to_string(r.output));
    o.expect(r.warnings.empty(), "unexpected warnings");

    // Malicious side: 930 distinct phishing hosts, 25 on link shorteners, 15 under popular domains, 30 repeats.
    static const char* shorteners[] = {"bit.ly", "tinyurl.com", "t.co", "goo.gl"};
    static const char* popular[] = {"google.com", "youtube.com", "facebook.com"};
    std::vector<cert::CertificateRecord> phish;
    for (std::size_t i = 0; i < 930; ++i)
        phish.push_back(testfx::record_of(host_spec("secure-login" + std::to_string(i) + ".account-check.ga", 9000 + i)));
    for (std::size_t i = 0; i < 25; ++i)
        phish.push_back(testfx::record_of(host_spec("r" + std::to_string(i) + "." + shorteners[i % 4], 12000 + i)));
    for (std::size_t i = 0; i < 15; ++i)
        phish.push_back(testfx::record_of(host_spec("s" + std::to_string(i) + "." + popular[i % 3], 13000 + i)));
    for (std::size_t i = 0; i < 30; ++i) phish.push_back(phish[i * 3]);
    auto m = dataset::filter_malicious(phish, dataset::FilterLists::bundled());
    auto mc = [&](DropReason d) { return m.report.drops.count(d) ? m.report.drops.at(d) : 0; };
    o.expect(m.report.input == 1000, "malicious input " + std::to_string(m.report.input));
    o.expect(m.report.balanced(), "malicious report unbalanced");
    o.expect(mc(DropReason::duplicate) == 30, "malicious duplicate " + std::to_string(mc(DropReason::duplicate)));
    o.expect(mc(DropReason::benign_service) == 25, "benign_service " + std::to_string(mc(DropReason::benign_service)));
    o.expect(mc(DropReason::popular) == 15, "popular " + std::to_string(mc(DropReason::popular)));
    o.expect(m.records.size() == 930, "malicious output " + std::to_string(m.records.size()));
}

// --- 8 -------------------------------------------------------------------

void balanced_assembly(Outcome& o) {
    fixtures::CorpusOptions opt;
    opt.benign = 709;
    opt.phish = 565;
    opt.seed = 8;
    auto corpus = fixtures::generate_corpus(opt, testfx::factory());
    std::vector<cert::CertificateRecord> benign, phish;
    for (const auto& c : corpus.certs) (c.phish ? phish : benign).push_back(cert::parse_der(c.der));
    o.expect(benign.size() == 709 && phish.size() == 565, "fixture sizes");
    dataset::AssembleOptions a;
    a.seed = 42;
    auto d1 = dataset::assemble(benign, phish, a);
    auto d2 = dataset::assemble(benign, phish, a);
    o.expect(d1.count(dataset::Label::benign) == 565, "benign " + std::to_string(d1.count(dataset::Label::benign)));
    o.expect(d1.count(dataset::Label::phish) == 565, "phish " + std::to_string(d1.count(dataset::Label::phish)));
    o.expect(dataset::dataset_hash(d1) == dataset::dataset_hash(d2), "same seed gave a different selection");
    std::set<std::string> chosen;
    for (const auto& r : d1.records) chosen.insert(to_hex(r.record.fingerprint));
    o.expect(chosen.size() == 1130, "selection has repeats");
}

// --- 9 -------------------------------------------------------------------

void prefix_filter(Outcome& o) {
    std::mt19937_64 rng(909);
    static const char* tlds[] = {"com", "net", "org", "io"};
    auto label = [&](std::size_t lo, std::size_t hi) {
        std::uniform_int_distribution<std::size_t> len(lo, hi), pick(0, 25);
        std::string s(len(rng), 'a');
        for (auto& c : s) c = static_cast<char>('a' + pick(rng));
        return s;
    };
    struct Domain {
        std::string full, registered;
    };
    std::vector<Domain> domains;
    std::uniform_int_distribution<int> depth(0, 2), tld(0, 3);
    for (int i = 0; i < 1000; ++i) {
        // Registered domains repeat so a listed parent covers several hosts.
        std::string reg = (i % 4 == 3 && !domains.empty()) ? domains[rng() % domains.size()].registered
                                                           : label(3, 12) + "." + tlds[tld(rng)];
        std::string full = reg;
        for (int d = depth(rng); d > 0; --d) full = label(1, 8) + "." + full;
        domains.push_back({full, reg});
    }
    intel::PrefixSet set;
    std::bernoulli_distribution listed(0.15), parent(0.5);
    for (const auto& d : domains)
        if (listed(rng)) set.insert(oracle_prefix((parent(rng) ? d.registered : d.full) + "/"));

    std::size_t positives = 0;
    for (const auto& d : domains) {
        bool expected = false;
        for (const auto& expr : {d.full + "/", d.registered + "/"}) {
            auto p = oracle_prefix(expr);
            expected = expected || set.contains(p);
        }
        std::vector<cert::DomainName> names{cert::decompose_domain(d.full)};
        bool got = intel::prefix_check(names, set);
        o.expect(got == expected, d.full);
        positives += expected;
    }
    o.expect(positives > 100 && positives < 900, "degenerate positive count " + std::to_string(positives));
}

}  // namespace

int main() {
    struct Entry {
        int id;
        std::string name;
        Criterion run;
        double budget_s;
    };
    std::vector<Entry> criteria = {
        {1, "golden feature values", golden_values, 1},
        {2, "n-gram and entropy oracle", ngram_oracle, 10},
        {3, "meta-classifier laws", meta_laws, 5},
        {4, "ROC and threshold oracle", roc_oracle, 30},
        {5, "forest sanity", forest_sanity, 0},
        {6, "pipeline end to end", end_to_end, 120},
        {7, "filtering accounting", filtering_accounting, 0},
        {8, "balanced assembly", balanced_assembly, 0},
        {9, "hash-prefix filter", prefix_filter, 0},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.notes.push_back(std::string("exception: ") + e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0 && secs > c.budget_s) {
            o.pass = false;
            o.notes.push_back("over the " + fmt(c.budget_s) + "s budget");
        }
        failures += !o.pass;
        std::printf("%s %d %s (%.2fs)", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs);
        for (const auto& n : o.notes) std::printf(" | %s", n.c_str());
        std::printf("\n");
        std::fflush(stdout);
    }
    fs::remove_all(workdir());
    return failures;
}
