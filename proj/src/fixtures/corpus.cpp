#include "ctphish/fixtures/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

#include "ctphish/cert/certificate.hpp"
#include "ctphish/data.hpp"
#include "ctphish/util/json.hpp"

namespace ctphish::fixtures {

using classifiers::CounterRng;

namespace {

constexpr const char* k_words[] = {
    "alpine", "amber",  "anchor", "apex",   "arbor",  "atlas",  "aurora", "badger", "bakery", "beacon",
    "birch",  "bloom",  "bolt",   "bridge", "brook",  "canyon", "cedar",  "cipher", "citrus", "clover",
    "cobalt", "comet",  "coral",  "crane",  "crest",  "delta",  "dune",   "ember",  "falcon", "fern",
    "fjord",  "flint",  "forge",  "garnet", "glade",  "granite", "harbor", "hazel", "heron",  "indigo",
    "iris",   "jade",   "juniper", "kestrel", "lagoon", "larch", "lumen",  "maple",  "marble", "meadow",
    "mesa",   "mint",   "monarch", "mosaic", "nectar", "nimbus", "north",  "oak",    "onyx",   "orchid",
    "pebble", "pine",   "pixel",  "prairie", "quartz", "raven", "reef",   "ridge",  "river",  "rowan",
    "sage",   "salt",   "sierra", "slate",  "sparrow", "spruce", "summit", "tango", "thistle", "tidal",
    "timber", "topaz",  "tundra", "umber",  "valley", "velvet", "vertex", "willow", "yarrow", "zephyr"};

constexpr const char* k_hosts[] = {"www", "api", "cdn", "app", "static", "img", "blog", "shop", "dev", "portal"};
constexpr const char* k_tlds[] = {"com", "com", "com", "net", "org", "de", "co.uk", "io", "fr", "nl", "eu", "ch"};
constexpr const char* k_odd_tlds[] = {"xyz", "online", "site"};
constexpr const char* k_mild[] = {"mail", "support", "online", "service"};

constexpr const char* k_brands[] = {"paypal", "appleid", "icloud", "netflix", "amazon", "ebay", "facebook",
                                    "microsoft", "outlook", "office365", "google", "gmail", "dropbox",
                                    "bankofamerica", "wellsfargo", "coinbase"};
constexpr const char* k_lures[] = {"login", "signin", "account", "verify", "secure", "update", "recovery",
                                   "billing", "authentication", "confirm", "unlock", "security"};
constexpr const char* k_phish_tlds[] = {"ga", "gq", "ml", "cf", "tk", "xyz", "top", "club", "online", "site"};

template <std::size_t N>
const char* pick(CounterRng& rng, const char* const (&arr)[N]) {
    return arr[rng.bounded(N)];
}

std::vector<std::pair<std::string, std::string>> issuer(CounterRng& rng) {
    switch (rng.bounded(4)) {
        case 0: return {{"C", "US"}, {"O", "DigiCert Inc"}, {"CN", "DigiCert TLS RSA SHA256 2020 CA1"}};
        case 1: return {{"C", "GB"}, {"O", "Sectigo Limited"}, {"CN", "Sectigo RSA Domain Validation Secure Server CA"}};
        default: return {{"C", "US"}, {"O", "Let's Encrypt"}, {"CN", "R3"}};
    }
}

}  // namespace

CertSpec benign_spec(CounterRng& rng, std::uint64_t serial) {
    CertSpec s;
    std::string label = std::string(pick(rng, k_words)) + pick(rng, k_words);
    if (rng.bounded(3) == 0) label += std::to_string(rng.bounded(100));
    std::string tld = pick(rng, k_tlds);
    auto roll = rng.bounded(1000);
    if (roll < 100) {
        label = std::string(pick(rng, k_mild)) + "-" + label;
    } else if (roll < 140) {
        tld = pick(rng, k_odd_tlds);
    } else if (roll < 150) {
        label = "support-" + label;
        tld = pick(rng, k_odd_tlds);
    }
    std::string base = label + "." + tld;
    std::string host = std::string(pick(rng, k_hosts)) + "." + base;
    s.dns_sans = {base, host};
    if (rng.bounded(5) == 0) s.dns_sans.push_back("*." + base);
    s.issuer = issuer(rng);
    bool ov = s.issuer[1].second != "Let's Encrypt" && rng.bounded(2) == 0;
    if (ov) {
        s.subject = {{"C", "DE"}, {"L", "Berlin"}, {"O", std::string(k_words[serial % 90]) + " GmbH"}, {"CN", host}};
        s.policy_oids = {"2.23.140.1.2.2"};
    } else {
        s.subject = {{"CN", rng.bounded(2) ? base : host}};
    }
    s.key = rng.bounded(3) == 0 ? KeyKind::rsa2048 : KeyKind::ec_p256;
    auto start = from_unix_ms(1588291200000 - static_cast<std::int64_t>(rng.bounded(60)) * 86'400'000);
    s.not_before = start;
    s.not_after = start + std::chrono::days(s.issuer[1].second == "Let's Encrypt" ? 90 : 365);
    s.ocsp_url = "http://ocsp.example-ca.test";
    if (ov) s.crl_url = "http://crl.example-ca.test/ca.crl";
    s.serial = serial;
    return s;
}

CertSpec phish_spec(CounterRng& rng, std::uint64_t serial) {
    CertSpec s;
    std::string brand = pick(rng, k_brands);
    std::string lure = pick(rng, k_lures);
    std::string name = rng.bounded(2) ? brand + "-" + lure : lure + "-" + brand;
    if (rng.bounded(2)) name += "-" + std::string(pick(rng, k_lures));
    name += std::to_string(serial % 1000);
    std::string domain = name + "." + pick(rng, k_phish_tlds);
    s.subject = {{"CN", domain}};
    s.dns_sans = {domain, "www." + domain};
    s.issuer = {{"C", "US"}, {"O", "Let's Encrypt"}, {"CN", "R3"}};
    s.key = KeyKind::ec_p256;
    s.not_before = from_unix_ms(1588291200000 - static_cast<std::int64_t>(rng.bounded(5)) * 86'400'000);
    s.not_after = s.not_before + std::chrono::days(90);
    s.ocsp_url = "http://r3.o.lencr.org";
    s.serial = serial;
    return s;
}

std::string Corpus::openphish_feed() const {
    std::string out;
    for (const auto& u : phish_urls) out += u + "\n";
    return out;
}

Corpus generate_corpus(const CorpusOptions& options, CertFactory& factory) {
    CounterRng rng(options.seed, 0xC0FFEE);
    const std::size_t total = options.benign + options.phish;
    // Planted positions: a seeded sample of distinct indices.
    std::vector<std::size_t> order(total);
    for (std::size_t i = 0; i < total; ++i) order[i] = i;
    for (std::size_t i = 0; i < options.phish && i < total; ++i) {
        std::swap(order[i], order[i + rng.bounded(total - i)]);
    }
    std::set<std::size_t> planted(order.begin(), order.begin() + static_cast<long>(std::min(options.phish, total)));

    Corpus c;
    c.certs.reserve(total);
    std::set<std::string> used;
    for (std::size_t i = 0; i < total; ++i) {
        bool phish = planted.contains(i);
        std::uint64_t serial = options.seed * 1'000'000 + i + 1;
        CertSpec spec;
        do {
            spec = phish ? phish_spec(rng, serial) : benign_spec(rng, serial);
        } while (!used.insert(spec.dns_sans.front()).second);
        bool pre = options.precert_every > 0 && (i + 1) % options.precert_every == 0;
        spec.precert_poison = pre;
        CorpusCert cc;
        cc.der = factory.make_der(spec);
        cc.phish = phish;
        cc.precert = pre;
        cc.domains = spec.dns_sans;
        if (phish) c.phish_urls.push_back("https://" + spec.dns_sans.front() + "/signin/index.php");
        c.certs.push_back(std::move(cc));
    }
    return c;
}

void write_corpus(const Corpus& corpus, const std::string& dir, const std::string& log_name,
                  std::size_t precert_every) {
    std::filesystem::create_directories(dir);
    std::string pem, labels;
    for (const auto& c : corpus.certs) {
        pem += cert::der_to_pem(c.der);
        labels += Json{{"fingerprint", to_hex(sha256(c.der))},
                       {"label", c.phish ? "phish" : "benign"},
                       {"domains", c.domains}}
                      .dump() +
                  "\n";
    }
    auto path = std::filesystem::path(dir);
    data::write_file_atomic((path / "certs.pem").string(), pem);
    data::write_file_atomic((path / "feed.txt").string(), corpus.openphish_feed());
    data::write_file_atomic((path / "labels.jsonl").string(), labels);
    Json log{{"name", log_name}, {"certificates", {"certs.pem"}}};
    if (precert_every) log["precert_every"] = precert_every;
    data::write_file_atomic((path / "fixture.json").string(), Json{{"logs", {log}}}.dump(2) + "\n");
}

}  // namespace ctphish::fixtures
