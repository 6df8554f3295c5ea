#include <doctest.h>

#include <filesystem>
#include <random>

#include "ctphish/errors.hpp"
#include "ctphish/intel/feeds.hpp"
#include "ctphish/intel/schedule.hpp"
#include "ctphish/intel/store.hpp"
#include "support/sha256_oracle.hpp"

using namespace ctphish;
using namespace ctphish::intel;
using cert::decompose_domain;

namespace {

const UtcTime t0 = from_unix_ms(1588291200000);

std::vector<cert::DomainName> names(std::initializer_list<const char*> list) {
    std::vector<cert::DomainName> out;
    for (auto n : list) out.push_back(decompose_domain(n));
    return out;
}

HashPrefix oracle_prefix(const std::string& expr) {
    auto d = oracle::sha256(expr);
    return {d[0], d[1], d[2], d[3]};
}

}  // namespace

TEST_CASE("host extraction") {
    CHECK(host_of_url("http://paypal-secured.ga/login") == "paypal-secured.ga");
    CHECK(host_of_url("HTTPS://User:pw@Login.Example.COM:8443/a?b#c") == "login.example.com");
    CHECK(host_of_url("bare-host.example") == "bare-host.example");
    CHECK(host_of_url("http://[2001:db8::1]:80/") == "2001:db8::1");
    CHECK(host_of_url("http://10.0.0.1/x") == "10.0.0.1");
    CHECK_FALSE(host_of_url("not a url").has_value());
    CHECK_FALSE(host_of_url("http:///nohost").has_value());
    CHECK_FALSE(host_of_url("localhost").has_value());
}

TEST_CASE("OpenPhish ingestion deduplicates against the store") {
    IntelStore store(":memory:");
    store.ingest(FeedSource::openphish, "http://a.example.com/x\n", t0);
    auto report = store.ingest(FeedSource::openphish,
                               "http://a.example.com/x\nhttp://b.example.net/login\nhttps://c.example.org/\n", t0);
    CHECK(report.new_entries.size() == 2);
    CHECK(report.duplicates == 1);
    CHECK(store.entry_count() == 3);

    auto again = store.ingest(FeedSource::openphish, "http://b.example.net/login\n", t0 + std::chrono::hours(12));
    CHECK(again.new_entries.empty());
    CHECK(store.entry_count() == 3);
    // Same URL from a different source is a distinct (url, source) pair.
    CHECK(store.ingest(FeedSource::custom, "http://b.example.net/login\n", t0).new_entries.size() == 1);
}

TEST_CASE("PhishTank CSV and JSON") {
    std::string csv =
        "phish_id,url,phish_detail_url,submission_time,verified,verification_time,online,target\n"
        "1,http://paypal-secured.ga/login,http://www.phishtank.com/phish_detail.php?phish_id=1,"
        "2020-05-01T10:00:00+00:00,yes,2020-05-01T10:05:00+00:00,yes,PayPal\n"
        "2,\"http://x.example.com/a,b\",d,2020-05-02T00:00:00+00:00,yes,,yes,Other\n"
        "3\n";
    auto feed = parse_feed(FeedSource::phishtank, csv, t0);
    REQUIRE(feed.entries.size() == 2);
    CHECK(feed.malformed == 1);
    CHECK(feed.entries[0].host == "paypal-secured.ga");
    CHECK(feed.entries[0].registered_domain == "paypal-secured.ga");
    CHECK(feed.entries[0].source == FeedSource::phishtank);
    CHECK(feed.entries[0].first_seen == parse_rfc3339("2020-05-01T10:00:00Z"));
    CHECK(feed.entries[1].url == "http://x.example.com/a,b");

    auto json = parse_feed(FeedSource::phishtank,
                           R"([{"phish_id":1,"url":"http://login.bank.example.co.uk/","submission_time":"2020-05-01T00:00:00+00:00"},{"nourl":1}])",
                           t0);
    REQUIRE(json.entries.size() == 1);
    CHECK(json.entries[0].registered_domain == "example.co.uk");
    CHECK(json.malformed == 1);
}

TEST_CASE("PhishStats JSON and CSV") {
    auto json = parse_feed(FeedSource::phishstats, R"([{"id":5,"url":"https://a.example.com/","date":"2020-05-03T00:00:00.000Z"}])", t0);
    REQUIRE(json.entries.size() == 1);
    CHECK(json.entries[0].first_seen == parse_rfc3339("2020-05-03T00:00:00Z"));
    auto csv = parse_feed(FeedSource::phishstats,
                          "######\n# PhishStats\n\"2020-05-03 01:02:03\",\"5.0\",\"http://b.example.com/x\",\"1.2.3.4\"\n", t0);
    REQUIRE(csv.entries.size() == 1);
    CHECK(csv.entries[0].host == "b.example.com");
}

TEST_CASE("empty payloads and unknown formats") {
    for (auto src : {FeedSource::openphish, FeedSource::phishtank, FeedSource::phishstats, FeedSource::custom}) {
        CHECK(parse_feed(src, "", t0).entries.empty());
        CHECK(parse_feed(src, "  \n\n", t0).entries.empty());
    }
    CHECK_THROWS_AS(parse_feed(FeedSource::openphish, "<html><body>rate limited</body></html>", t0), UnknownFormat);
    CHECK_THROWS_AS(parse_feed(FeedSource::openphish, "[1,2,3]", t0), UnknownFormat);
    CHECK_THROWS_AS(parse_feed(FeedSource::phishtank, "a,b,c\n1,2,3\n", t0), UnknownFormat);
    CHECK_THROWS_AS(parse_feed(FeedSource::phishstats, "{not json", t0), UnknownFormat);
    CHECK_THROWS_AS(parse_feed(FeedSource::custom, "no hosts here\nat all\n", t0), UnknownFormat);
}

TEST_CASE("match_domains") {
    IntelStore store(":memory:");
    store.ingest(FeedSource::phishtank, "url\nhttp://paypal-secured.ga/login\nhttp://login.evil.example/\n", t0);
    auto snap = store.snapshot();
    CHECK(snap.match_domains(names({"paypal-secured.ga"})).has_value());
    CHECK_FALSE(snap.match_domains(names({"netflix.com"})).has_value());
    auto m = snap.match_domains(names({"*.evil.example"}));
    REQUIRE(m.has_value());
    CHECK(m->host == "login.evil.example");
    CHECK_FALSE(snap.match_domains(names({"*.example"})).has_value());
    CHECK_FALSE(snap.match_domains(names({"evil.example"})).has_value());
    CHECK_FALSE(snap.match_domains(names({"www.paypal-secured.ga"})).has_value());
}

TEST_CASE("url expressions and prefix_check against the oracle") {
    auto d = decompose_domain("phish.example.com");
    CHECK(url_expressions(d) == std::vector<std::string>{"phish.example.com/", "example.com/"});
    CHECK(url_expressions(decompose_domain("example.com")) == std::vector<std::string>{"example.com/"});
    CHECK(url_expressions(decompose_domain("*.a.example.com")) ==
          std::vector<std::string>{"a.example.com/", "example.com/"});

    PrefixSet set;
    set.insert(oracle_prefix("phish.example.com/"));
    CHECK(prefix_check(names({"phish.example.com"}), set));
    CHECK(prefix_check(names({"benign.example.org", "phish.example.com"}), set));

    PrefixSet empty;
    CHECK_FALSE(prefix_check(names({"phish.example.com", "example.com"}), empty));

    PrefixSet rd;
    rd.insert(oracle_prefix("shady.example/"));
    CHECK(prefix_check(names({"cdn.shady.example"}), rd));
    CHECK_FALSE(rd.contains(oracle_prefix("cdn.shady.example/")));
}

TEST_CASE("prefix_check distributes over union") {
    std::mt19937 rng(17);
    auto random_name = [&] {
        std::string s;
        int labels = 2 + static_cast<int>(rng() % 3);
        for (int l = 0; l < labels; ++l) {
            if (l) s += '.';
            int len = 1 + static_cast<int>(rng() % 8);
            for (int i = 0; i < len; ++i) s += static_cast<char>('a' + rng() % 26);
        }
        return s;
    };
    std::vector<std::string> pool;
    for (int i = 0; i < 200; ++i) pool.push_back(random_name());
    PrefixSet p1, p2;
    for (int i = 0; i < 40; ++i) {
        (i % 2 ? p1 : p2).insert(oracle_prefix(pool[rng() % pool.size()] + "/"));
    }
    PrefixSet both = p1;
    both.merge(p2);
    for (const auto& n : pool) {
        auto d = names({n.c_str()});
        CHECK(prefix_check(d, both) == (prefix_check(d, p1) || prefix_check(d, p2)));
    }
}

TEST_CASE("prefix list parsing") {
    auto set = PrefixSet::parse("# comment\nDEADBEEF\n0a0b0c0d  \n\n" + std::string(64, 'f') + "\n");
    CHECK(set.size() == 3);
    CHECK(set.contains({0xde, 0xad, 0xbe, 0xef}));
    Sha256Digest ff;
    ff.fill(0xff);
    CHECK(set.contains_full_hash(ff));
    CHECK_THROWS_AS(PrefixSet::parse("xyz\n"), UnknownFormat);
    CHECK_THROWS_AS(PrefixSet::parse("abcd\n"), UnknownFormat);
}

TEST_CASE("verification flips once the feed catches up and stays confirmed") {
    IntelStore store(":memory:");
    std::vector<std::string> domains{"paypal-secured.ga", "www.paypal-secured.ga"};
    auto before = store.snapshot();
    CHECK(Verifier(before).verify(domains) == Verdict::no_evidence);

    store.ingest(FeedSource::phishtank, "url\nhttp://paypal-secured.ga/login\n", t0);
    auto after = store.snapshot();
    CHECK(Verifier(after).verify(domains) == Verdict::confirmed_phish);

    store.ingest(FeedSource::openphish, "http://other.example/\n", t0);
    CHECK(Verifier(store.snapshot()).verify(domains) == Verdict::confirmed_phish);

    PrefixSet ps;
    ps.insert(oracle_prefix("prefixed.example/"));
    store.add_prefixes(ps);
    auto snap = store.snapshot();
    CHECK(Verifier(snap).verify({"prefixed.example"}) == Verdict::confirmed_phish);
    CHECK(Verifier(snap, {.require_full_hash = true}).verify({"prefixed.example"}) == Verdict::no_evidence);

    PrefixSet full;
    full.insert_full_hash(sha256(as_bytes("prefixed.example/")));
    store.add_prefixes(full);
    CHECK(Verifier(store.snapshot(), {.require_full_hash = true}).verify({"prefixed.example"}) ==
          Verdict::confirmed_phish);

    NoopReputationClient noop;
    CHECK(Verifier(snap, {}, &noop).verify({"clean.example"}) == Verdict::no_evidence);
}

TEST_CASE("store persists across reopen") {
    auto path = (std::filesystem::temp_directory_path() / ("ctphish_intel_" + std::to_string(::getpid())) / "intel.db").string();
    std::filesystem::remove_all(std::filesystem::path(path).parent_path());
    {
        IntelStore store(path);
        store.ingest(FeedSource::openphish, "http://a.example.com/\n", t0);
        PrefixSet ps;
        ps.insert({1, 2, 3, 4});
        store.add_prefixes(ps);
        store.set_last_fetch("openphish", t0);
    }
    IntelStore store(path);
    CHECK(store.entry_count() == 1);
    auto snap = store.snapshot();
    CHECK(snap.prefixes().contains({1, 2, 3, 4}));
    CHECK(store.last_fetch("openphish") == t0);
    CHECK_FALSE(store.last_fetch("phishtank").has_value());
}

TEST_CASE("schedules and feed runs") {
    auto s = FeedSchedule::defaults();
    CHECK(s.interval("phishtank") == std::chrono::hours(1));
    CHECK(s.interval("phishstats") == std::chrono::hours(1));
    CHECK(s.interval("prefixes") == std::chrono::hours(1));
    CHECK(s.interval("openphish") == std::chrono::hours(12));
    CHECK_THROWS_AS(s.set("x", std::chrono::seconds(30)), ConfigError);
    CHECK(s.due("openphish", std::nullopt, t0));
    CHECK_FALSE(s.due("openphish", t0, t0 + std::chrono::hours(11)));
    CHECK(s.due("openphish", t0, t0 + std::chrono::hours(12)));

    IntelStore store(":memory:");
    std::vector<FeedDefinition> feeds = {
        {"openphish", FeedSource::openphish, "mem://openphish"},
        {"prefixes", std::nullopt, "mem://prefixes"},
        {"phishtank", FeedSource::phishtank, "mem://broken"},
    };
    int calls = 0;
    Fetcher fetch = [&](const std::string& url) -> std::string {
        ++calls;
        if (url == "mem://openphish") return "http://a.example.com/\nhttp://b.example.com/\n";
        if (url == "mem://prefixes") return "01020304\n";
        throw Error("connection refused");
    };
    auto r = run_feeds(store, feeds, s, t0, false, fetch);
    REQUIRE(r.size() == 3);
    CHECK(r[0].new_entries == 2);
    CHECK(r[1].prefixes_added == 1);
    CHECK_FALSE(r[2].fetched);
    CHECK(r[2].error == "connection refused");
    CHECK(calls == 3);

    // An hour later only the hourly feeds are due; the failed one retries.
    auto r2 = run_feeds(store, feeds, s, t0 + std::chrono::hours(1), false, fetch);
    CHECK_FALSE(r2[0].fetched);
    CHECK(r2[1].fetched);
    CHECK(calls == 5);
    auto r3 = run_feeds(store, feeds, s, t0 + std::chrono::hours(1), true, fetch);
    CHECK(r3[0].fetched);
    CHECK(r3[0].duplicates == 2);
}
