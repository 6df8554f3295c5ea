#include <doctest.h>

#include <fstream>
#include <regex>

#include "ctphish/cert/certificate.hpp"
#include "ctphish/cert/domain.hpp"
#include "ctphish/data.hpp"
#include "ctphish/errors.hpp"
#include "support/fixture_helpers.hpp"
#include "support/sha256_oracle.hpp"

using namespace ctphish;
using namespace ctphish::cert;

TEST_CASE("public suffix list matches the reference vectors") {
    auto psl = PublicSuffixList::parse(data::load("public_suffix_list.dat"), {.include_private = true});
    std::ifstream in(testfx::data_path("psl_test_vectors.txt"));
    REQUIRE(in);
    std::regex line_re(R"re(^checkPublicSuffix\((null|'([^']*)'), (null|'([^']*)')\);)re");
    std::string line;
    int checked = 0;
    while (std::getline(in, line)) {
        std::smatch m;
        if (!std::regex_search(line, m, line_re) || m[1] == "null") continue;
        std::string input = m[2];
        bool ascii = std::all_of(input.begin(), input.end(), [](unsigned char c) { return c < 0x80; });
        if (!ascii || input.empty() || input.front() == '.') continue;
        std::optional<std::string> expected;
        if (m[3] != "null") expected = normalize_domain(m[4].str());
        auto d = decompose_domain(input, psl);
        std::optional<std::string> got;
        if (d.registered_domain != d.public_suffix) got = d.registered_domain;
        CAPTURE(input);
        CHECK(got == expected);
        ++checked;
    }
    CHECK(checked > 50);
}

TEST_CASE("decompose_domain examples") {
    auto a = decompose_domain("anycast.ftl.netflix.com");
    CHECK(a.labels == std::vector<std::string>{"anycast", "ftl", "netflix", "com"});
    CHECK(a.public_suffix == "com");
    CHECK(a.registered_domain == "netflix.com");
    CHECK(a.core == "anycastftlnetflix");
    CHECK(a.host_labels().size() == 3);
    CHECK(a.has_valid_tld);

    auto b = decompose_domain("paypal-secured.ga");
    CHECK(b.public_suffix == "ga");
    CHECK(b.core == "paypal-secured");
    CHECK(b.host_labels().size() == 1);

    auto w = decompose_domain("*.example.co.uk");
    CHECK(w.is_wildcard);
    CHECK(w.public_suffix == "co.uk");
    CHECK(w.core == "example");
    CHECK(w.registered_domain == "example.co.uk");

    auto ip = decompose_domain("192.0.2.10");
    CHECK(ip.is_ip);
    CHECK(ip.core == "192021" "0");

    auto unknown = decompose_domain("host.notatld");
    CHECK(unknown.public_suffix == "notatld");
    CHECK_FALSE(unknown.has_valid_tld);

    CHECK(decompose_domain("xn--bcher-kva.example").is_idn);
    auto upper = decompose_domain("WWW.Example.COM.");
    CHECK(upper.full == "www.example.com");
    CHECK(upper.had_uppercase);
}

TEST_CASE("decompose_domain is idempotent on its full output") {
    for (const char* name : {"anycast.ftl.netflix.com", "*.a.b.co.uk", "x.y.z.notatld", "com", "a.com", "::1",
                             "Mixed.Case.ORG.", "paypal-secured.ga"}) {
        auto d = decompose_domain(name);
        auto again = decompose_domain(d.full);
        again.had_uppercase = d.had_uppercase;
        CHECK(again == d);
    }
}

TEST_CASE("parse_der on the benign example") {
    auto r = testfx::record_of(testfx::netflix_spec());
    CHECK(r.common_name == "anycast.ftl.netflix.com");
    CHECK(r.subject_attrs.contains(SubjectAttr::C));
    CHECK(r.subject_attrs.contains(SubjectAttr::ST));
    CHECK(r.subject_attrs.contains(SubjectAttr::L));
    CHECK(r.subject_attrs.contains(SubjectAttr::CN));
    CHECK(r.subject_dn_count == 6);
    CHECK(r.subject_char_count == 64);
    CHECK(r.sans.size() == 7);
    CHECK(r.valid_period_days() == 36);
    CHECK(r.key_algorithm == KeyAlgorithm::ec);
    CHECK(r.key_size_bits == 256);
    CHECK(r.policy_oids.size() == 2);
    CHECK(r.has_ocsp);
    CHECK(r.has_cdp);
    CHECK(r.issuer_dn == "C=US, O=DigiCert Inc, CN=DigiCert ECC Secure Server CA");
}

TEST_CASE("parse_der on the phishing example") {
    auto r = testfx::record_of(testfx::paypal_spec());
    CHECK(r.subject_attrs == SubjectAttrSet{SubjectAttr::CN});
    CHECK(r.subject_dn_count == 1);
    CHECK(r.subject_char_count == 17);
    CHECK(r.valid_period_days() == 90);
    CHECK(r.key_algorithm == KeyAlgorithm::rsa);
    CHECK(r.key_size_bits == 2048);
    CHECK_FALSE(r.has_cdp);
    CHECK(r.domains() == std::vector<std::string>{"paypal-secured.ga", "www.paypal-secured.ga"});
}

TEST_CASE("degenerate validity and malformed input") {
    auto spec = testfx::paypal_spec();
    spec.not_after = spec.not_before;
    CHECK(testfx::record_of(spec).valid_period_days() == 0);

    Bytes junk = {0x30, 0x03, 0x02, 0x01};
    CHECK_THROWS_AS(parse_der(junk), MalformedDer);
}

TEST_CASE("SANs are normalized and deduplicated") {
    fixtures::CertSpec spec;
    spec.subject = {{"CN", "Example.COM"}};
    spec.dns_sans = {"example.com", "EXAMPLE.com.", "www.example.com"};
    auto r = testfx::record_of(spec);
    CHECK(r.common_name == "example.com");
    CHECK(r.sans == std::vector<std::string>{"example.com", "www.example.com"});
    CHECK(r.domains().size() == 2);

    fixtures::CertSpec only;
    only.subject = {{"CN", "one.example"}};
    only.dns_sans = {"one.example"};
    CHECK(testfx::record_of(only).domains().size() == 1);
}

TEST_CASE("dedup keys") {
    auto spec = testfx::paypal_spec();
    auto der = testfx::factory().make_der(spec);
    auto a = parse_der(der);
    auto b = parse_der(der, from_unix_ms(5), CtLogIndex{"other", 9});
    CHECK(dedup_key(a) == dedup_key(b));
    spec.serial += 1;
    CHECK(dedup_key(testfx::record_of(spec)) != dedup_key(a));

    auto raw = sha256(as_bytes("abc"));
    CHECK(to_hex(raw).starts_with("ba7816bf"));
    auto independent = oracle::sha256("abc");
    CHECK(std::equal(raw.begin(), raw.end(), independent.begin()));
    CHECK(to_hex(a.fingerprint) == to_hex(oracle::sha256(std::string(der.begin(), der.end()))));
}

TEST_CASE("precertificates parse and count the poison extension") {
    auto spec = testfx::paypal_spec();
    auto plain = testfx::record_of(spec);
    spec.precert_poison = true;
    auto pre = testfx::record_of(spec);
    CHECK(pre.extension_count == plain.extension_count + 1);
}

TEST_CASE("record JSON round trip is lossless") {
    for (auto spec : {testfx::netflix_spec(), testfx::paypal_spec()}) {
        auto der = testfx::factory().make_der(spec);
        auto r = parse_der(der, parse_rfc3339("2020-05-03T10:11:12.345Z"), CtLogIndex{"xenon2020", 42});
        auto line = to_jsonl_line(r);
        CHECK(line.find('\n') == std::string::npos);
        CHECK(from_jsonl_line(line) == r);
        CHECK(parse_der(der, r.seen_at, r.ct_log_index) == r);
    }
    auto r = testfx::record_of(testfx::paypal_spec());
    auto j = nlohmann::json(r);
    CHECK(j["ct_log_index"].is_null());
    CHECK(j["fingerprint"].get<std::string>().size() == 64);
}

TEST_CASE("PEM bundle helpers") {
    auto der = testfx::factory().make_der(testfx::paypal_spec());
    auto pem = der_to_pem(der) + der_to_pem(der);
    auto back = pem_bundle_to_der(pem);
    REQUIRE(back.size() == 2);
    CHECK(back[0] == der);
}
