#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "ctphish/cli/cli.hpp"
#include "ctphish/classifiers/model.hpp"
#include "ctphish/ctlog/client.hpp"
#include "ctphish/data.hpp"
#include "ctphish/dataset/builder.hpp"
#include "ctphish/fixtures/corpus.hpp"
#include "support/fixture_helpers.hpp"

using namespace ctphish;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

fs::path scratch() {
    auto dir = fs::temp_directory_path() / ("ctphish_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

Run invoke(std::vector<std::string> args) {
    std::vector<std::string> full{"--log-level", "warn", "--set", "paths.data_dir=" + (scratch() / "data").string()};
    full.insert(full.end(), args.begin(), args.end());
    std::ostringstream out, err;
    int code = cli::run(full, out, err);
    return {code, out.str(), err.str()};
}

std::string small_dataset() {
    auto path = (scratch() / "ds.jsonl").string();
    if (fs::exists(path)) return path;
    fixtures::CorpusOptions opt;
    opt.benign = 80;
    opt.phish = 40;
    opt.seed = 12;
    auto corpus = fixtures::generate_corpus(opt, testfx::factory());
    std::vector<cert::CertificateRecord> benign, phish;
    for (const auto& c : corpus.certs) (c.phish ? phish : benign).push_back(cert::parse_der(c.der));
    dataset::AssembleOptions a;
    a.created_at = parse_rfc3339("2020-06-01");
    dataset::save_dataset(path, dataset::assemble(benign, phish, a));
    return path;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
    auto help = invoke({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("classify") != std::string::npos);

    auto unknown = invoke({"train", "--frobnicate"});
    CHECK(unknown.code == 2);
    CHECK(unknown.err.find("Usage") != std::string::npos);

    auto no_model = invoke({"classify", "--live", "--log", "x=http://127.0.0.1:1/x"});
    CHECK(no_model.code == 2);
    CHECK(no_model.err.find("--model") != std::string::npos);

    CHECK(invoke({}).code == 2);
    CHECK(invoke({"classify", "--model", "m.json", "--live", "--all"}).code == 2);
    CHECK(invoke({"--set", "threshold=2", "config"}).code == 2);
    CHECK(invoke({"--set", "nokey", "config"}).code == 2);
}

TEST_CASE("operational errors exit with 1") {
    auto missing = invoke({"train", "--dataset", (scratch() / "absent.jsonl").string(), "--out", "m.json"});
    CHECK(missing.code == 1);
    auto bad_spec = (scratch() / "bad_spec.json").string();
    data::write_file_atomic(bad_spec, R"({"logs":[]})");
    CHECK(invoke({"fixture-server", "--spec", bad_spec, "--duration", "1s"}).code == 1);
}

TEST_CASE("train writes a model and echoes the manifest") {
    auto model = (scratch() / "rf.json").string();
    auto r = invoke({"train", "--dataset", small_dataset(), "--features", "all", "--mode", "domain", "--meta", "min",
                  "--trees", "200", "--seed", "1", "--out", model});
    REQUIRE(r.code == 0);
    auto j = Json::parse(r.out);
    CHECK(j["name"] == "RF_all-min");
    CHECK(j["manifest"]["n_trees"] == 200);
    CHECK(j["manifest"]["seed"] == 1);
    CHECK(j["manifest"]["timestamp"] == "2020-06-01T00:00:00Z");
    auto m = classifiers::TrainedModel::load(model);
    CHECK(m.meta() == classifiers::Meta::min);
    CHECK(m.forest().trees().size() == 200);

    auto twice = (scratch() / "rf2.json").string();
    invoke({"train", "--dataset", small_dataset(), "--meta", "min", "--trees", "200", "--seed", "1", "--out", twice});
    CHECK(data::read_file(model) == data::read_file(twice));

    auto sel = invoke({"select-features", "--model", model, "--k", "5", "--json"});
    REQUIRE(sel.code == 0);
    CHECK(Json::parse(sel.out)["selected"] == 5);
    auto csv = invoke({"features", "--dataset", small_dataset(), "--model", model, "--mode", "cert"});
    REQUIRE(csv.code == 0);
    CHECK(std::count(csv.out.begin(), csv.out.end(), '\n') == 81);
}

TEST_CASE("fixture server subcommand serves a fixture spec") {
    auto dir = (scratch() / "fx").string();
    auto gen = invoke({"fixture-gen", "--out", dir, "--benign", "990", "--phish", "10", "--seed", "5"});
    REQUIRE(gen.code == 0);
    CHECK(Json::parse(gen.out)["certificates"] == 1000);
    auto port_file = (scratch() / "port").string();
    fs::remove(port_file);
    cli::stop_flag() = false;
    std::thread server([&] { invoke({"fixture-server", "--spec", dir + "/fixture.json", "--port-file", port_file}); });
    while (!fs::exists(port_file)) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    auto url = "http://127.0.0.1:" + data::lines(data::read_file(port_file)).at(0) + "/fixture";
    {
        ctlog::LogClient client({"fixture", url});
        CHECK(client.get_sth().tree_size == 1000);
        auto batch = client.get_entries(0, 600);
        CHECK(batch.entries.size() == 600);
        CHECK(client.counters().truncated_pages == 2);
    }

    auto model = (scratch() / "rules.json").string();
    REQUIRE(invoke({"train", "--kind", "rules", "--out", model}).code == 0);
    auto results = (scratch() / "fx_results.jsonl").string();
    auto r = invoke({"classify", "--model", model, "--all", "--log", "fixture=" + url, "--out", results});
    REQUIRE(r.code == 0);
    CHECK(Json::parse(r.out)["stats"]["emitted"] == 1000);
    auto ev = invoke({"evaluate", "--results", results, "--labels", dir + "/labels.jsonl", "--target-fpr", "0.001", "--json"});
    REQUIRE(ev.code == 0);
    CHECK(Json::parse(ev.out)["positives"] == 10);

    auto db = (scratch() / "intel.sqlite").string();
    REQUIRE(invoke({"ingest-feeds", "--db", db, "--feed", "openphish=openphish@" + dir + "/feed.txt"}).code == 0);
    auto rv = invoke({"reverify", results, "--db", db});
    REQUIRE(rv.code == 0);
    CHECK(Json::parse(rv.out)["confirmed"] == 10);
    auto rep = invoke({"report", "--results", results, "--target-fpr", "0.001", "--json"});
    REQUIRE(rep.code == 0);
    CHECK(Json::parse(rep.out)["rows"][0]["known_phish"] == 10);

    cli::stop_flag() = true;
    server.join();
    cli::stop_flag() = false;
}

TEST_CASE("config subcommand shows the layered result") {
    auto r = invoke({"--set", "workers.classify=9", "config"});
    REQUIRE(r.code == 0);
    CHECK(Json::parse(r.out)["workers"]["classify"] == 9);
    auto keys = invoke({"config", "--keys"});
    CHECK(keys.out.find("retry.max_attempts\n") != std::string::npos);
}
