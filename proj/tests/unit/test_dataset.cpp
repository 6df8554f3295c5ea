#include <doctest.h>

#include <filesystem>
#include <unistd.h>

#include "ctphish/ctlog/fixture_server.hpp"
#include "ctphish/dataset/builder.hpp"
#include "ctphish/errors.hpp"
#include "ctphish/fixtures/corpus.hpp"
#include "ctphish/intel/feeds.hpp"
#include "support/fixture_helpers.hpp"
#include "support/sha256_oracle.hpp"
#include "support/tls_server.hpp"

using namespace ctphish;
using namespace ctphish::dataset;

namespace {

fixtures::CertSpec host_spec(const std::string& host, std::uint64_t serial) {
    fixtures::CertSpec s;
    s.subject = {{"CN", host}};
    s.dns_sans = {host, "www." + host};
    s.serial = serial;
    return s;
}

cert::CertificateRecord record(const std::string& host, std::uint64_t serial) {
    return testfx::record_of(host_spec(host, serial));
}

intel::PrefixSet oracle_prefixes(const std::vector<std::string>& expressions) {
    intel::PrefixSet set;
    for (const auto& e : expressions) {
        auto d = oracle::sha256(e);
        set.insert({d[0], d[1], d[2], d[3]});
    }
    return set;
}

intel::IntelSnapshot snapshot_with(const std::vector<std::string>& urls, intel::PrefixSet prefixes = {}) {
    std::vector<intel::IntelEntry> entries;
    for (const auto& u : urls) entries.push_back(*intel::make_entry(u, intel::FeedSource::openphish, utc_now()));
    return intel::IntelSnapshot(entries, std::move(prefixes));
}

std::vector<cert::CertificateRecord> records(std::size_t n, std::uint64_t base) {
    std::vector<cert::CertificateRecord> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(record("site" + std::to_string(base + i) + ".example.org", base + i));
    return out;
}

}  // namespace

TEST_CASE("filter lists") {
    auto f = FilterLists::bundled();
    CHECK(f.benign_services.contains("bit.ly"));
    CHECK(f.popular_domains.contains("google.com"));
    CHECK(f.malicious_domains.empty());
    auto parsed = FilterLists::parse_list("# c\n1,Login.Google.com\nbit.ly\n");
    CHECK(parsed.contains("google.com"));
    CHECK(parsed.contains("bit.ly"));
}

TEST_CASE("benign filter arithmetic") {
    auto rs = records(8, 100);
    rs.push_back(rs[0]);
    rs.push_back(rs[1]);
    auto snap = snapshot_with({"http://site103.example.org/x"});
    auto out = filter_benign(rs, FilterLists::bundled(), snap);
    CHECK(out.records.size() == 7);
    CHECK(out.report.drops[DropReason::duplicate] == 2);
    CHECK(out.report.drops[DropReason::phishing_db] == 1);
    CHECK(out.report.balanced());

    // A SAN colliding with the prefix set.
    auto prefixed = filter_benign(records(5, 200), FilterLists::bundled(),
                                  snapshot_with({}, oracle_prefixes({"www.site202.example.org/"})));
    CHECK(prefixed.report.drops[DropReason::prefix] == 1);
    CHECK(prefixed.records.size() == 4);

    FilterLists lists = FilterLists::bundled();
    CHECK(filter_benign(records(5, 300), lists, snapshot_with({})).records.size() == 5);
    lists.malicious_domains = {"example.org"};
    auto mal = filter_benign(records(5, 300), lists, snapshot_with({}));
    CHECK(mal.report.drops[DropReason::malicious_list] == 5);
    CHECK(mal.report.balanced());
}

TEST_CASE("malicious filter") {
    std::vector<cert::CertificateRecord> rs{record("bit.ly", 1), record("paypal-secured.ga", 2),
                                            testfx::record_of(host_spec("login.google.com", 3))};
    rs.push_back(rs[1]);
    auto out = filter_malicious(rs, FilterLists::bundled());
    REQUIRE(out.records.size() == 1);
    CHECK(out.records[0].common_name == "paypal-secured.ga");
    CHECK(out.report.drops[DropReason::benign_service] == 1);
    CHECK(out.report.drops[DropReason::popular] == 1);
    CHECK(out.report.drops[DropReason::duplicate] == 1);
    CHECK(out.report.balanced());
    CHECK(out.report.to_json()["drops"]["popular"] == 1);
}

TEST_CASE("assemble balances deterministically") {
    auto benign = records(30, 1000);
    auto phish = records(12, 2000);
    AssembleOptions opt;
    opt.seed = 5;
    auto a = assemble(benign, phish, opt);
    CHECK(a.count(Label::benign) == 12);
    CHECK(a.count(Label::phish) == 12);
    auto b = assemble(benign, phish, opt);
    CHECK(dataset_hash(a) == dataset_hash(b));
    opt.seed = 6;
    CHECK(dataset_hash(assemble(benign, phish, opt)) != dataset_hash(a));
    opt.balance = false;
    auto all = assemble(benign, phish, opt);
    CHECK(all.records.size() == 42);
    CHECK_THROWS_AS(assemble({}, phish, opt), EmptyClass);

    // A fingerprint labelled both ways stays phish only.
    auto overlap = benign;
    overlap.push_back(phish[0]);
    auto c = assemble(overlap, phish, opt);
    CHECK(c.count(Label::benign) == 30);
    c.validate();
}

TEST_CASE("dataset jsonl round trip") {
    AssembleOptions opt;
    opt.created_at = parse_rfc3339("2020-06-01T00:00:00Z");
    auto d = assemble(records(3, 10), records(3, 20), opt);
    auto back = dataset_from_jsonl(to_jsonl(d));
    CHECK(back.created_at == d.created_at);
    REQUIRE(back.records.size() == 6);
    CHECK(back.records[4].record == d.records[4].record);
    CHECK(back.records[4].label == Label::phish);
    CHECK(dataset_hash(back) == dataset_hash(d));
}

TEST_CASE("build_benign downloads chunks and accounts for every entry") {
    std::vector<ctlog::FixtureCert> certs;
    auto add = [&](const fixtures::CertSpec& s) { certs.push_back({testfx::factory().make_der(s), false}); };
    for (int i = 0; i < 20; ++i) add(host_spec("node" + std::to_string(i) + ".example.net", 500 + i));
    certs.push_back(certs[3]);
    certs.push_back(certs[4]);
    ctlog::FixtureLog log;
    log.name = "bravo";
    log.certs = certs;
    ctlog::FixtureServer server({log});
    server.start();

    BenignSource src;
    src.log = {"bravo", server.base_url("bravo")};
    src.fetch.page_size = 8;
    auto plan = ctlog::plan_chunks(0, 22, 10, 0);
    auto lists = FilterLists::bundled();
    auto snap = snapshot_with({"https://node7.example.net/login"}, oracle_prefixes({"node9.example.net/"}));
    auto out = build_benign(plan, src, lists, snap);
    CHECK(out.report.input == 22);
    CHECK(out.report.drops[DropReason::duplicate] == 2);
    CHECK(out.report.drops[DropReason::phishing_db] == 1);
    CHECK(out.report.drops[DropReason::prefix] == 1);
    CHECK(out.records.size() == 18);
    CHECK(out.report.balanced());
    CHECK(out.records[0].ct_log_index->log_id == "bravo");

    // A failing chunk yields a warning and partial results.
    BenignSource dead = src;
    dead.log.base_url = "http://127.0.0.1:1";
    dead.policy.max_attempts = 1;
    dead.policy.request_timeout = std::chrono::milliseconds(200);
    auto partial = build_benign(plan, dead, lists, snap);
    CHECK(partial.records.empty());
    CHECK(partial.report.warnings.size() == plan.chunks.size());
    server.stop();
}

TEST_CASE("TLS certificate capture never sends HTTP") {
    auto spec = host_spec("short.example", 77);
    spec.key = fixtures::KeyKind::ec_p256;
    auto der = testfx::factory().make_der(spec);
    testfx::TlsServer server(der, testfx::factory().private_key_pem(fixtures::KeyKind::ec_p256));
    TlsFetchOptions opt;
    opt.connect_host = "127.0.0.1";
    opt.port = server.port();
    opt.timeout = std::chrono::milliseconds(2000);
    auto r = fetch_malicious_cert("https://short.example/abc?redirect=phish", opt);
    REQUIRE(r.record.has_value());
    CHECK(r.record->fingerprint == sha256(der));
    std::this_thread::sleep_for(std::chrono::milliseconds(400));
    CHECK(server.handshakes() == 1);
    CHECK(server.last_sni() == "short.example");
    CHECK(server.app_bytes() == 0);

    auto many = fetch_malicious_certs({"https://short.example/1", "short.example"}, opt, 2);
    CHECK(many[0].record.has_value());
    CHECK(many[1].record.has_value());

    TlsFetchOptions closed;
    closed.port = 1;
    closed.timeout = std::chrono::milliseconds(300);
    auto none = fetch_malicious_cert("https://127.0.0.1/", closed);
    CHECK_FALSE(none.record.has_value());
    CHECK(none.failure == "ConnectFailed");

    testfx::PlainServer plain;
    TlsFetchOptions p;
    p.port = plain.port();
    p.timeout = std::chrono::milliseconds(500);
    auto hs = fetch_malicious_cert("https://127.0.0.1/", p);
    CHECK(hs.failure == "HandshakeFailed");
    CHECK(fetch_malicious_cert("not a url at all", p).failure == "BadUrl");
}

TEST_CASE("fixture corpus") {
    fixtures::CorpusOptions opt;
    opt.benign = 200;
    opt.phish = 10;
    opt.seed = 3;
    auto c = fixtures::generate_corpus(opt, testfx::factory());
    CHECK(c.certs.size() == 210);
    CHECK(c.phish_urls.size() == 10);
    std::size_t phish = 0;
    for (const auto& cc : c.certs) phish += cc.phish;
    CHECK(phish == 10);
    auto again = fixtures::generate_corpus(opt, testfx::factory());
    CHECK(again.phish_urls == c.phish_urls);
    auto feed = intel::parse_feed(intel::FeedSource::openphish, c.openphish_feed(), utc_now());
    CHECK(feed.entries.size() == 10);

    auto dir = std::filesystem::temp_directory_path() / ("ctphish_corpus_" + std::to_string(::getpid()));
    fixtures::write_corpus(c, dir.string(), "fx");
    auto logs = ctlog::load_fixture_spec((dir / "fixture.json").string());
    CHECK(logs.at(0).certs.size() == 210);
    std::filesystem::remove_all(dir);
}
