#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ctphish/util/bytes.hpp"
#include "ctphish/util/time.hpp"

namespace ctphish::fixtures {

enum class KeyKind { ec_p256, rsa2048, ed25519 };

/// Description of a synthetic certificate. Attribute lists keep their order.
struct CertSpec {
    std::vector<std::pair<std::string, std::string>> subject;  ///< e.g. {"CN", "example.com"}
    std::vector<std::pair<std::string, std::string>> issuer = {
        {"C", "US"}, {"O", "Let's Encrypt"}, {"CN", "R3"}};
    std::vector<std::string> dns_sans;
    UtcTime not_before = from_unix_ms(1588291200000);  // 2020-05-01
    UtcTime not_after = from_unix_ms(1588291200000 + 90LL * 86'400'000);
    KeyKind key = KeyKind::ec_p256;
    std::vector<std::string> policy_oids = {"2.23.140.1.2.1"};
    std::string ocsp_url = "http://ocsp.example.test";
    std::string crl_url;
    bool precert_poison = false;
    std::uint64_t serial = 1;
};

/// Builds and signs certificates with a fixed, lazily generated key set.
/// Not thread-safe.
class CertFactory {
public:
    CertFactory();
    ~CertFactory();
    CertFactory(const CertFactory&) = delete;
    CertFactory& operator=(const CertFactory&) = delete;

    Bytes make_der(const CertSpec& spec);
    /// PEM private key matching the subject key of certificates of this kind.
    std::string private_key_pem(KeyKind kind);
    /// DER of the TBSCertificate inside a certificate.
    static Bytes tbs_of(ByteView der);

private:
    struct Keys;
    std::unique_ptr<Keys> keys_;
};

}  // namespace ctphish::fixtures
