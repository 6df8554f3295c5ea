#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctphish/util/json.hpp"

#include "ctphish/util/bytes.hpp"
#include "ctphish/util/time.hpp"

namespace ctphish::cert {

enum class KeyAlgorithm { rsa, ec, dsa, other };

std::string_view to_string(KeyAlgorithm a);
KeyAlgorithm key_algorithm_from_string(std::string_view s);

enum class SubjectAttr : std::uint8_t { C, ST, L, O, OU, CN };

/// Set of subject attribute kinds, stored as a bitmask.
class SubjectAttrSet {
public:
    SubjectAttrSet() = default;
    SubjectAttrSet(std::initializer_list<SubjectAttr> attrs) {
        for (auto a : attrs) insert(a);
    }
    void insert(SubjectAttr a) { bits_ |= bit(a); }
    bool contains(SubjectAttr a) const { return (bits_ & bit(a)) != 0; }
    std::size_t size() const;
    std::vector<std::string> names() const;
    static SubjectAttrSet from_names(const std::vector<std::string>& names);
    bool operator==(const SubjectAttrSet&) const = default;

private:
    static std::uint8_t bit(SubjectAttr a) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(a)); }
    std::uint8_t bits_ = 0;
};

struct CtLogIndex {
    std::string log_id;
    std::uint64_t index = 0;
    bool operator==(const CtLogIndex&) const = default;
};

/// Normalized view of one parsed certificate. Immutable after parsing.
struct CertificateRecord {
    Sha256Digest fingerprint{};
    std::optional<std::string> common_name;
    std::vector<std::string> sans;
    std::string issuer_dn;
    SubjectAttrSet subject_attrs;
    int subject_dn_count = 0;    ///< number of subject RDN attributes, any type
    int subject_char_count = 0;  ///< total characters over subject attribute values
    int extension_count = 0;
    std::vector<std::string> policy_oids;
    UtcTime not_before{};
    UtcTime not_after{};
    KeyAlgorithm key_algorithm = KeyAlgorithm::other;
    int key_size_bits = 0;
    bool has_ocsp = false;
    bool has_cdp = false;
    std::optional<CtLogIndex> ct_log_index;
    UtcTime seen_at{};

    /// {CN} ∪ SANs with duplicates removed; the CN (if any) comes first.
    std::vector<std::string> domains() const;
    /// Whole days between not_before and not_after, rounded down.
    std::int64_t valid_period_days() const;

    bool operator==(const CertificateRecord&) const = default;
};

/// Parses a DER-encoded X.509 certificate. Throws MalformedDer. Unknown key
/// algorithms yield KeyAlgorithm::other with key_size_bits = 0.
CertificateRecord parse_der(ByteView der);
CertificateRecord parse_der(ByteView der, UtcTime seen_at, std::optional<CtLogIndex> log_index);

/// Dedup key: SHA-256 over the DER bytes.
inline const Sha256Digest& dedup_key(const CertificateRecord& record) { return record.fingerprint; }

void to_json(nlohmann::json& j, const CertificateRecord& r);
void from_json(const nlohmann::json& j, CertificateRecord& r);

/// One JSON object per line.
std::string to_jsonl_line(const CertificateRecord& r);
CertificateRecord from_jsonl_line(std::string_view line);

/// Decodes all PEM "CERTIFICATE" blocks of a bundle to DER.
std::vector<Bytes> pem_bundle_to_der(std::string_view pem);
std::string der_to_pem(ByteView der);

}  // namespace ctphish::cert
