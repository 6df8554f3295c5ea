#include <doctest.h>

#include <httplib.h>

#include <filesystem>
#include <random>
#include <set>
#include <thread>

#include "ctphish/cert/certificate.hpp"
#include "ctphish/ctlog/chunk_plan.hpp"
#include "ctphish/ctlog/client.hpp"
#include "ctphish/ctlog/fetcher.hpp"
#include "ctphish/ctlog/fixture_server.hpp"
#include "ctphish/ctlog/follower.hpp"
#include "ctphish/ctlog/leaf.hpp"
#include "ctphish/data.hpp"
#include "ctphish/errors.hpp"
#include "support/fixture_helpers.hpp"

using namespace ctphish;
using namespace ctphish::ctlog;

namespace {

std::vector<FixtureCert> make_certs(std::size_t n, std::uint64_t serial_base = 1) {
    std::vector<FixtureCert> out;
    for (std::size_t i = 0; i < n; ++i) {
        fixtures::CertSpec spec;
        std::string host = "host" + std::to_string(serial_base + i) + ".example.com";
        spec.subject = {{"CN", host}};
        spec.dns_sans = {host};
        spec.serial = serial_base + i;
        out.push_back({testfx::factory().make_der(spec), false});
    }
    return out;
}

const std::vector<FixtureCert>& shared_certs() {
    static auto certs = make_certs(1010);
    return certs;
}

FixtureLog make_log(std::string name, std::uint64_t initial, std::uint64_t page = 256) {
    FixtureLog log;
    log.name = std::move(name);
    log.certs = shared_certs();
    log.initial_size = initial;
    log.page_size = page;
    return log;
}

RetryPolicy fast_retry() {
    RetryPolicy p;
    p.base = std::chrono::milliseconds(1);
    p.cap = std::chrono::milliseconds(5);
    p.max_attempts = 3;
    p.request_timeout = std::chrono::milliseconds(2000);
    return p;
}

std::string temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("ctphish_ctlog_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

std::uint64_t count_entry_requests(const std::vector<std::string>& log) {
    return static_cast<std::uint64_t>(
        std::count_if(log.begin(), log.end(), [](const std::string& l) { return l.find("get-entries") != std::string::npos; }));
}

}  // namespace

TEST_CASE("leaf round trip for x509 entries") {
    auto der = testfx::factory().make_der(testfx::paypal_spec());
    MerkleTreeLeaf leaf;
    leaf.timestamp_ms = 1588291200123;
    leaf.certificate = der;
    auto encoded = encode_leaf(leaf);
    CHECK(encoded[0] == 0);
    CHECK(encoded[1] == 0);
    CHECK(decode_leaf(encoded) == leaf);
    auto entry = decode_entry(7, encoded, encode_x509_extra_data({der}));
    CHECK(entry.cert_der == der);
    CHECK_FALSE(entry.is_precert);
    CHECK(entry.index == 7);
    CHECK(to_unix_ms(entry.timestamp) == 1588291200123);
}

TEST_CASE("precert leaves expose the TBS and the precertificate") {
    auto spec = testfx::paypal_spec();
    spec.precert_poison = true;
    auto der = testfx::factory().make_der(spec);
    MerkleTreeLeaf leaf;
    leaf.type = EntryType::precert_entry;
    leaf.certificate = fixtures::CertFactory::tbs_of(der);
    leaf.issuer_key_hash.fill(0xAB);
    auto encoded = encode_leaf(leaf);
    CHECK(decode_leaf(encoded) == leaf);

    auto entry = decode_entry(0, encoded, encode_precert_extra_data(der, {}));
    CHECK(entry.is_precert);
    CHECK(entry.tbs == leaf.certificate);
    CHECK(entry.cert_der == der);

    auto bare = decode_entry(0, encoded, {});
    auto wrapped = cert::parse_der(bare.cert_der);
    auto full = cert::parse_der(der);
    CHECK(wrapped.sans == full.sans);
    CHECK(wrapped.common_name == full.common_name);
    CHECK(wrapped.extension_count == full.extension_count);
}

TEST_CASE("malformed leaves raise LeafDecodeError") {
    CHECK_THROWS_AS(decode_leaf(Bytes{0, 0, 1}), LeafDecodeError);
    MerkleTreeLeaf leaf;
    leaf.certificate = {1, 2, 3};
    auto encoded = encode_leaf(leaf);
    encoded.push_back(0);
    CHECK_THROWS_AS(decode_leaf(encoded), LeafDecodeError);
    encoded.pop_back();
    encoded[0] = 1;
    CHECK_THROWS_AS(decode_leaf(encoded), LeafDecodeError);
}

TEST_CASE("plan_chunks arithmetic") {
    auto gapless = plan_chunks(0, 1000, 100, 0);
    REQUIRE(gapless.chunks.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(gapless.chunks[i].first == i * 100);
        CHECK(gapless.chunks[i].second == i * 100 + 100);
    }
    auto gapped = plan_chunks(0, 1000, 100, 900);
    REQUIRE(gapped.chunks.size() == 1);
    CHECK(gapped.chunks[0] == std::pair<std::uint64_t, std::uint64_t>{0, 100});
    CHECK(plan_chunks(5, 5, 10, 0).chunks.empty());
    CHECK_THROWS(plan_chunks(0, 10, 0, 0));

    std::mt19937_64 rng(5);
    for (int iter = 0; iter < 2000; ++iter) {
        std::uint64_t first = rng() % 500, last = first + rng() % 3000;
        std::uint64_t size = 1 + rng() % 400, gap = rng() % 300;
        auto plan = plan_chunks(first, last, size, gap);
        // Enumerate the plan independently.
        std::vector<std::pair<std::uint64_t, std::uint64_t>> expect;
        for (std::uint64_t s = first; s < last; s += size + gap) expect.emplace_back(s, std::min(last, s + size));
        REQUIRE(plan.chunks == expect);
        for (std::size_t i = 1; i < plan.chunks.size(); ++i) {
            CHECK(plan.chunks[i].first - plan.chunks[i - 1].first == size + gap);
            CHECK(plan.chunks[i].first >= plan.chunks[i - 1].second);
        }
    }
}

TEST_CASE("fixture server and client basics") {
    FixtureServer server({make_log("alpha", 1000)});
    server.start();
    LogClient client({"alpha", server.base_url("alpha")}, fast_retry());
    CHECK(client.get_sth().tree_size == 1000);

    server.clear_request_log();
    auto batch = client.get_entries(0, 512);
    CHECK(batch.entries.size() == 512);
    CHECK(batch.skipped.empty());
    CHECK(count_entry_requests(server.request_log()) == 2);
    for (std::size_t i = 0; i < batch.entries.size(); ++i) {
        REQUIRE(batch.entries[i].index == i);
        REQUIRE(batch.entries[i].cert_der == shared_certs()[i].der);
    }
    CHECK(client.counters().truncated_pages == 1);

    auto again = client.get_entries(0, 512);
    for (std::size_t i = 0; i < batch.entries.size(); ++i) CHECK(again.entries[i].leaf_input == batch.entries[i].leaf_input);
    CHECK(client.get_entries(10, 10).entries.empty());
    CHECK_THROWS_AS(client.get_entries(2000, 2001), RangeRejected);
}

TEST_CASE("transient 429 is retried with backoff") {
    auto log = make_log("beta", 1000);
    log.fail_count = 1;
    FixtureServer server({log});
    server.start();
    LogClient client({"beta", server.base_url("beta")}, fast_retry());
    std::vector<std::chrono::milliseconds> sleeps;
    client.set_sleeper([&](auto d) { sleeps.push_back(d); });
    CHECK(client.get_sth().tree_size == 1000);
    CHECK(client.counters().retries == 1);
    CHECK(sleeps == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(1)});
}

TEST_CASE("retry policy defaults") {
    RetryPolicy p;
    CHECK(p.delay(0) == std::chrono::seconds(1));
    CHECK(p.delay(1) == std::chrono::seconds(2));
    CHECK(p.delay(5) == std::chrono::seconds(32));
    CHECK(p.delay(6) == std::chrono::seconds(60));
    CHECK(p.max_attempts == 8);
}

TEST_CASE("unreachable and malformed logs") {
    LogClient dead({"dead", "http://127.0.0.1:1"}, fast_retry());
    dead.set_sleeper([](auto) {});
    CHECK_THROWS_AS(dead.get_sth(), LogUnreachable);
    CHECK(dead.counters().requests == 3);

    httplib::Server bad;
    bad.Get("/ct/v1/get-sth", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"timestamp": 1})", "application/json");
    });
    int port = bad.bind_to_any_port("127.0.0.1");
    std::thread t([&] { bad.listen_after_bind(); });
    bad.wait_until_ready();
    LogClient client({"bad", "http://127.0.0.1:" + std::to_string(port)}, fast_retry());
    CHECK_THROWS_AS(client.get_sth(), MalformedResponse);
    bad.stop();
    t.join();
}

TEST_CASE("corrupt leaves are skipped and counted") {
    httplib::Server srv;
    auto der = testfx::factory().make_der(testfx::paypal_spec());
    MerkleTreeLeaf leaf;
    leaf.certificate = der;
    std::string good = base64_encode(encode_leaf(leaf));
    srv.Get("/ct/v1/get-entries", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"entries":[{"leaf_input":")" + good + R"(","extra_data":""},{"leaf_input":"AAAA","extra_data":""},{"leaf_input":")" +
                            good + R"(","extra_data":""}]})",
                        "application/json");
    });
    int port = srv.bind_to_any_port("127.0.0.1");
    std::thread t([&] { srv.listen_after_bind(); });
    srv.wait_until_ready();
    LogClient client({"x", "http://127.0.0.1:" + std::to_string(port)}, fast_retry());
    auto batch = client.get_entries(0, 3);
    CHECK(batch.entries.size() == 2);
    CHECK(batch.skipped == std::vector<std::uint64_t>{1});
    CHECK(batch.entries[1].index == 2);
    srv.stop();
    t.join();
}

TEST_CASE("locate_span by binary search over leaf timestamps") {
    auto log = make_log("gamma", 1000);
    log.step = std::chrono::minutes(1);
    FixtureServer server({log});
    server.start();
    LogClient client({"gamma", server.base_url("gamma")}, fast_retry());
    auto t0 = log.start_time;
    auto [a, b] = locate_span(client, 1000, {t0 + std::chrono::minutes(100), t0 + std::chrono::minutes(250)});
    CHECK(a == 100);
    CHECK(b == 250);
    auto plan = plan_chunks(client, 100, 0, {t0, t0 + std::chrono::hours(1000)});
    CHECK(plan.chunks.size() == 10);
    CHECK(plan.entry_count() == 1000);
    CHECK_THROWS_AS(plan_chunks(client, 100, 0, {t0 + std::chrono::hours(24 * 365), t0 + std::chrono::hours(24 * 366)}),
                    EmptySpan);
}

TEST_CASE("parallel range fetch re-sequences batches") {
    FixtureServer server({make_log("delta", 1000, 64)});
    server.start();
    LogSource src{"delta", server.base_url("delta")};
    for (std::size_t workers : {1u, 4u}) {
        std::vector<std::uint64_t> seen;
        auto stats = fetch_ranges(src, fast_retry(), {{0, 500}, {700, 1000}}, {workers, 50, 3}, [&](EntryBatch&& b) {
            for (auto& e : b.entries) seen.push_back(e.index);
        });
        CHECK(stats.entries == 800);
        REQUIRE(seen.size() == 800);
        CHECK(std::is_sorted(seen.begin(), seen.end()));
        CHECK(seen[500] == 700);
    }
}

TEST_CASE("follow emits deltas exactly once and resumes from the cursor") {
    FixtureServer server({make_log("eps", 1000), make_log("zeta", 1000)});
    server.start();
    auto cursor_file = temp_path("cursors.json");
    std::filesystem::remove(cursor_file);

    FollowOptions opts;
    opts.poll_interval = std::chrono::milliseconds(0);
    opts.max_polls = 1;
    {
        // First run: no cursor, starts at the current head, sees nothing.
        CursorStore cursors(cursor_file);
        LogFollower f({"eps", server.base_url("eps")}, fast_retry(), &cursors, opts);
        std::vector<std::uint64_t> seen;
        f.run([&](EntryBatch&& b) {
            for (auto& e : b.entries) seen.push_back(e.index);
        });
        CHECK(seen.empty());
        CHECK_FALSE(cursors.get("eps").has_value());
    }
    {
        CursorStore cursors(cursor_file);
        cursors.set("eps", 1000);
        server.grow("eps", 5);
        LogFollower f({"eps", server.base_url("eps")}, fast_retry(), &cursors, opts);
        std::vector<std::uint64_t> seen;
        f.run([&](EntryBatch&& b) {
            for (auto& e : b.entries) seen.push_back(e.index);
        });
        CHECK(seen == std::vector<std::uint64_t>{1000, 1001, 1002, 1003, 1004});
    }
    {
        // Restart with the persisted cursor at 1005.
        CursorStore cursors(cursor_file);
        CHECK(cursors.get("eps") == 1005u);
        server.grow("eps", 5);
        LogFollower f({"eps", server.base_url("eps")}, fast_retry(), &cursors, opts);
        std::vector<std::uint64_t> seen;
        auto stats = f.run([&](EntryBatch&& b) {
            for (auto& e : b.entries) seen.push_back(e.index);
        });
        CHECK(seen == std::vector<std::uint64_t>{1005, 1006, 1007, 1008, 1009});
        CHECK(stats.next_index == 1010);
    }

    // Two logs followed concurrently keep per-log order.
    server.grow("zeta", 10);
    std::map<std::string, std::vector<std::uint64_t>> seen;
    std::mutex mu;
    std::vector<std::thread> threads;
    for (const char* name : {"eps", "zeta"}) {
        threads.emplace_back([&, name] {
            FollowOptions o;
            o.poll_interval = std::chrono::milliseconds(0);
            o.start_index = 990;
            o.idle_polls = 1;
            o.fetch = {3, 4, 0};
            LogFollower f({name, server.base_url(name)}, fast_retry(), nullptr, o);
            f.run([&](EntryBatch&& b) {
                std::lock_guard lock(mu);
                for (auto& e : b.entries) seen[name].push_back(e.index);
            });
        });
    }
    for (auto& t : threads) t.join();
    for (const char* name : {"eps", "zeta"}) {
        auto& v = seen[name];
        REQUIRE(v.size() == 20);
        CHECK(std::is_sorted(v.begin(), v.end()));
        CHECK(std::set<std::uint64_t>(v.begin(), v.end()).size() == 20);
    }
}

TEST_CASE("time-based growth schedule") {
    auto log = make_log("eta", 1000);
    log.growth_entries = 10;
    log.growth_every = std::chrono::minutes(1);
    FixtureServer server({log});
    UtcTime now = parse_rfc3339("2026-01-01T00:00:00Z");
    server.set_clock([&] { return now; });
    server.start();
    CHECK(server.tree_size("eta") == 1000);
    now += std::chrono::seconds(61);
    CHECK(server.tree_size("eta") == 1010);
    now += std::chrono::hours(1);
    CHECK(server.tree_size("eta") == 1010);  // capped at the corpus size
}

TEST_CASE("fixture spec file") {
    auto pem_path = temp_path("spec_certs.pem");
    std::string pem;
    for (std::size_t i = 0; i < 20; ++i) pem += cert::der_to_pem(shared_certs()[i].der);
    data::write_file_atomic(pem_path, pem);
    auto spec_path = temp_path("spec.json");
    data::write_file_atomic(spec_path, R"({"logs":[{"name":"s","certificates":["spec_certs.pem"],"page_size":8,
        "precert_every":4,"growth":{"entries":1,"every":"1m"},"initial_size":10}]})");
    auto logs = load_fixture_spec(spec_path);
    REQUIRE(logs.size() == 1);
    CHECK(logs[0].certs.size() == 20);
    CHECK(logs[0].page_size == 8);
    CHECK(logs[0].certs[3].precert);
    CHECK_FALSE(logs[0].certs[2].precert);

    FixtureServer server(logs);
    server.start();
    LogClient client({"s", server.base_url("s")}, fast_retry());
    CHECK(client.get_sth().tree_size == 10);
    auto b = client.get_entries(0, 10);
    CHECK(b.entries[3].is_precert);
    CHECK(cert::parse_der(b.entries[3].cert_der).sans == cert::parse_der(shared_certs()[3].der).sans);

    data::write_file_atomic(spec_path, R"({"logs":[{"name":"s","certificates":["spec_certs.pem"],"bogus":1}]})");
    CHECK_THROWS_AS(load_fixture_spec(spec_path), SpecInvalid);
    data::write_file_atomic(spec_path, R"({"logs":[]})");
    CHECK_THROWS_AS(load_fixture_spec(spec_path), SpecInvalid);
}
