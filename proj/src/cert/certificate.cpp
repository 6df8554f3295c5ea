#include "ctphish/cert/certificate.hpp"

#include <openssl/asn1.h>
#include <openssl/evp.h>
#include <openssl/objects.h>
#include <openssl/pem.h>
#include <openssl/x509.h>
#include <openssl/x509v3.h>

#include <algorithm>
#include <memory>
#include <unordered_set>

#include "ctphish/cert/domain.hpp"
#include "ctphish/errors.hpp"

namespace ctphish::cert {

std::string_view to_string(KeyAlgorithm a) {
    switch (a) {
        case KeyAlgorithm::rsa: return "RSA";
        case KeyAlgorithm::ec: return "EC";
        case KeyAlgorithm::dsa: return "DSA";
        case KeyAlgorithm::other: break;
    }
    return "other";
}

KeyAlgorithm key_algorithm_from_string(std::string_view s) {
    if (s == "RSA") return KeyAlgorithm::rsa;
    if (s == "EC") return KeyAlgorithm::ec;
    if (s == "DSA") return KeyAlgorithm::dsa;
    return KeyAlgorithm::other;
}

namespace {

constexpr std::string_view k_attr_names[] = {"C", "ST", "L", "O", "OU", "CN"};

}  // namespace

std::size_t SubjectAttrSet::size() const {
    std::size_t n = 0;
    for (unsigned i = 0; i < 6; ++i) n += (bits_ >> i) & 1u;
    return n;
}

std::vector<std::string> SubjectAttrSet::names() const {
    std::vector<std::string> out;
    for (unsigned i = 0; i < 6; ++i) {
        if ((bits_ >> i) & 1u) out.emplace_back(k_attr_names[i]);
    }
    return out;
}

SubjectAttrSet SubjectAttrSet::from_names(const std::vector<std::string>& names) {
    SubjectAttrSet set;
    for (const auto& n : names) {
        auto it = std::find(std::begin(k_attr_names), std::end(k_attr_names), n);
        if (it == std::end(k_attr_names)) throw std::invalid_argument("unknown subject attribute " + n);
        set.insert(static_cast<SubjectAttr>(it - std::begin(k_attr_names)));
    }
    return set;
}

std::vector<std::string> CertificateRecord::domains() const {
    std::vector<std::string> out;
    if (common_name) out.push_back(*common_name);
    for (const auto& san : sans) {
        if (std::find(out.begin(), out.end(), san) == out.end()) out.push_back(san);
    }
    return out;
}

std::int64_t CertificateRecord::valid_period_days() const {
    auto diff = not_after - not_before;
    return std::chrono::floor<std::chrono::days>(diff).count();
}

namespace {

struct X509Deleter {
    void operator()(X509* x) const { X509_free(x); }
};
struct GeneralNamesDeleter {
    void operator()(GENERAL_NAMES* g) const { GENERAL_NAMES_free(g); }
};
struct PoliciesDeleter {
    void operator()(CERTIFICATEPOLICIES* p) const { CERTIFICATEPOLICIES_free(p); }
};
struct AiaDeleter {
    void operator()(AUTHORITY_INFO_ACCESS* a) const { AUTHORITY_INFO_ACCESS_free(a); }
};

std::string asn1_string_utf8(const ASN1_STRING* s) {
    unsigned char* out = nullptr;
    int len = ASN1_STRING_to_UTF8(&out, s);
    if (len < 0) return {};
    std::string value(reinterpret_cast<char*>(out), static_cast<std::size_t>(len));
    OPENSSL_free(out);
    return value;
}

std::size_t utf8_length(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
}

UtcTime asn1_time_to_utc(const ASN1_TIME* t) {
    std::tm tm{};
    if (t == nullptr || ASN1_TIME_to_tm(t, &tm) != 1) throw MalformedDer("invalid validity time");
    std::time_t secs = timegm(&tm);
    return UtcTime{std::chrono::seconds{secs}};
}

std::string name_to_string(const X509_NAME* name) {
    std::string out;
    int count = X509_NAME_entry_count(name);
    for (int i = 0; i < count; ++i) {
        const X509_NAME_ENTRY* entry = X509_NAME_get_entry(name, i);
        const ASN1_OBJECT* obj = X509_NAME_ENTRY_get_object(entry);
        int nid = OBJ_obj2nid(obj);
        std::string key;
        if (nid != NID_undef) {
            key = OBJ_nid2sn(nid);
        } else {
            char buf[128];
            OBJ_obj2txt(buf, sizeof buf, obj, 1);
            key = buf;
        }
        if (!out.empty()) out += ", ";
        out += key + "=" + asn1_string_utf8(X509_NAME_ENTRY_get_data(entry));
    }
    return out;
}

std::string ip_to_string(const ASN1_OCTET_STRING* ip) {
    const unsigned char* p = ASN1_STRING_get0_data(ip);
    int len = ASN1_STRING_length(ip);
    char buf[64];
    if (len == 4) {
        std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", p[0], p[1], p[2], p[3]);
        return buf;
    }
    if (len == 16) {
        std::string out;
        for (int i = 0; i < 16; i += 2) {
            if (i) out.push_back(':');
            std::snprintf(buf, sizeof buf, "%x", (p[i] << 8) | p[i + 1]);
            out += buf;
        }
        return out;
    }
    return {};
}

}  // namespace

CertificateRecord parse_der(ByteView der) { return parse_der(der, UtcTime{}, std::nullopt); }

CertificateRecord parse_der(ByteView der, UtcTime seen_at, std::optional<CtLogIndex> log_index) {
    const unsigned char* p = der.data();
    std::unique_ptr<X509, X509Deleter> x509(d2i_X509(nullptr, &p, static_cast<long>(der.size())));
    if (!x509) throw MalformedDer("unparseable certificate DER");

    CertificateRecord r;
    r.fingerprint = sha256(der);
    r.seen_at = seen_at;
    r.ct_log_index = std::move(log_index);

    const X509_NAME* subject = X509_get_subject_name(x509.get());
    int entries = X509_NAME_entry_count(subject);
    r.subject_dn_count = entries;
    for (int i = 0; i < entries; ++i) {
        const X509_NAME_ENTRY* entry = X509_NAME_get_entry(subject, i);
        std::string value = asn1_string_utf8(X509_NAME_ENTRY_get_data(entry));
        r.subject_char_count += static_cast<int>(utf8_length(value));
        switch (OBJ_obj2nid(X509_NAME_ENTRY_get_object(entry))) {
            case NID_countryName: r.subject_attrs.insert(SubjectAttr::C); break;
            case NID_stateOrProvinceName: r.subject_attrs.insert(SubjectAttr::ST); break;
            case NID_localityName: r.subject_attrs.insert(SubjectAttr::L); break;
            case NID_organizationName: r.subject_attrs.insert(SubjectAttr::O); break;
            case NID_organizationalUnitName: r.subject_attrs.insert(SubjectAttr::OU); break;
            case NID_commonName:
                r.subject_attrs.insert(SubjectAttr::CN);
                // The last CN is the most specific one; names with spaces are
                // organisation labels rather than hosts.
                if (!value.empty() && value.find(' ') == std::string::npos) {
                    r.common_name = normalize_domain(value);
                }
                break;
            default: break;
        }
    }

    r.issuer_dn = name_to_string(X509_get_issuer_name(x509.get()));
    r.extension_count = X509_get_ext_count(x509.get());

    std::unique_ptr<GENERAL_NAMES, GeneralNamesDeleter> names(static_cast<GENERAL_NAMES*>(
        X509_get_ext_d2i(x509.get(), NID_subject_alt_name, nullptr, nullptr)));
    if (names) {
        std::unordered_set<std::string> seen;
        for (int i = 0; i < sk_GENERAL_NAME_num(names.get()); ++i) {
            const GENERAL_NAME* gn = sk_GENERAL_NAME_value(names.get(), i);
            std::string value;
            if (gn->type == GEN_DNS) {
                value = normalize_domain(asn1_string_utf8(gn->d.dNSName));
            } else if (gn->type == GEN_IPADD) {
                value = ip_to_string(gn->d.iPAddress);
            }
            if (!value.empty() && seen.insert(value).second) r.sans.push_back(std::move(value));
        }
    }

    std::unique_ptr<CERTIFICATEPOLICIES, PoliciesDeleter> policies(static_cast<CERTIFICATEPOLICIES*>(
        X509_get_ext_d2i(x509.get(), NID_certificate_policies, nullptr, nullptr)));
    if (policies) {
        for (int i = 0; i < sk_POLICYINFO_num(policies.get()); ++i) {
            const POLICYINFO* info = sk_POLICYINFO_value(policies.get(), i);
            char buf[128];
            OBJ_obj2txt(buf, sizeof buf, info->policyid, 1);
            r.policy_oids.emplace_back(buf);
        }
    }

    std::unique_ptr<AUTHORITY_INFO_ACCESS, AiaDeleter> aia(static_cast<AUTHORITY_INFO_ACCESS*>(
        X509_get_ext_d2i(x509.get(), NID_info_access, nullptr, nullptr)));
    if (aia) {
        for (int i = 0; i < sk_ACCESS_DESCRIPTION_num(aia.get()); ++i) {
            const ACCESS_DESCRIPTION* ad = sk_ACCESS_DESCRIPTION_value(aia.get(), i);
            if (OBJ_obj2nid(ad->method) == NID_ad_OCSP) r.has_ocsp = true;
        }
    }
    r.has_cdp = X509_get_ext_by_NID(x509.get(), NID_crl_distribution_points, -1) >= 0;

    r.not_before = asn1_time_to_utc(X509_get0_notBefore(x509.get()));
    r.not_after = asn1_time_to_utc(X509_get0_notAfter(x509.get()));
    if (r.not_after < r.not_before) throw MalformedDer("notAfter precedes notBefore");

    if (EVP_PKEY* key = X509_get0_pubkey(x509.get())) {
        switch (EVP_PKEY_get_base_id(key)) {
            case EVP_PKEY_RSA:
            case EVP_PKEY_RSA_PSS: r.key_algorithm = KeyAlgorithm::rsa; break;
            case EVP_PKEY_EC: r.key_algorithm = KeyAlgorithm::ec; break;
            case EVP_PKEY_DSA: r.key_algorithm = KeyAlgorithm::dsa; break;
            default: r.key_algorithm = KeyAlgorithm::other; break;
        }
        r.key_size_bits = r.key_algorithm == KeyAlgorithm::other ? 0 : EVP_PKEY_get_bits(key);
    }
    return r;
}

void to_json(nlohmann::json& j, const CertificateRecord& r) {
    j = nlohmann::json{
        {"fingerprint", to_hex(r.fingerprint)},
        {"common_name", r.common_name ? nlohmann::json(*r.common_name) : nlohmann::json(nullptr)},
        {"sans", r.sans},
        {"issuer_dn", r.issuer_dn},
        {"subject_attrs", r.subject_attrs.names()},
        {"subject_dn_count", r.subject_dn_count},
        {"subject_char_count", r.subject_char_count},
        {"extension_count", r.extension_count},
        {"policy_oids", r.policy_oids},
        {"not_before", format_rfc3339(r.not_before)},
        {"not_after", format_rfc3339(r.not_after)},
        {"key_algorithm", to_string(r.key_algorithm)},
        {"key_size_bits", r.key_size_bits},
        {"has_ocsp", r.has_ocsp},
        {"has_cdp", r.has_cdp},
        {"ct_log_index", r.ct_log_index
                             ? nlohmann::json{{"log_id", r.ct_log_index->log_id},
                                              {"index", r.ct_log_index->index}}
                             : nlohmann::json(nullptr)},
        {"seen_at", format_rfc3339(r.seen_at)},
    };
}

void from_json(const nlohmann::json& j, CertificateRecord& r) {
    Bytes fp = from_hex(j.at("fingerprint").get<std::string>());
    if (fp.size() != r.fingerprint.size()) throw std::invalid_argument("fingerprint must be 32 bytes");
    std::copy(fp.begin(), fp.end(), r.fingerprint.begin());
    const auto& cn = j.at("common_name");
    r.common_name = cn.is_null() ? std::nullopt : std::optional<std::string>(cn.get<std::string>());
    r.sans = j.at("sans").get<std::vector<std::string>>();
    r.issuer_dn = j.at("issuer_dn").get<std::string>();
    r.subject_attrs = SubjectAttrSet::from_names(j.at("subject_attrs").get<std::vector<std::string>>());
    r.subject_dn_count = j.value("subject_dn_count", static_cast<int>(r.subject_attrs.size()));
    r.subject_char_count = j.at("subject_char_count").get<int>();
    r.extension_count = j.at("extension_count").get<int>();
    r.policy_oids = j.at("policy_oids").get<std::vector<std::string>>();
    r.not_before = parse_rfc3339(j.at("not_before").get<std::string>());
    r.not_after = parse_rfc3339(j.at("not_after").get<std::string>());
    r.key_algorithm = key_algorithm_from_string(j.at("key_algorithm").get<std::string>());
    r.key_size_bits = j.at("key_size_bits").get<int>();
    r.has_ocsp = j.at("has_ocsp").get<bool>();
    r.has_cdp = j.at("has_cdp").get<bool>();
    const auto& idx = j.at("ct_log_index");
    if (idx.is_null()) {
        r.ct_log_index.reset();
    } else {
        r.ct_log_index = CtLogIndex{idx.at("log_id").get<std::string>(), idx.at("index").get<std::uint64_t>()};
    }
    r.seen_at = parse_rfc3339(j.at("seen_at").get<std::string>());
}

std::string to_jsonl_line(const CertificateRecord& r) { return nlohmann::json(r).dump(); }

CertificateRecord from_jsonl_line(std::string_view line) {
    return nlohmann::json::parse(line).get<CertificateRecord>();
}

std::vector<Bytes> pem_bundle_to_der(std::string_view pem) {
    std::vector<Bytes> out;
    constexpr std::string_view begin = "-----BEGIN CERTIFICATE-----";
    constexpr std::string_view end = "-----END CERTIFICATE-----";
    std::size_t pos = 0;
    while ((pos = pem.find(begin, pos)) != std::string_view::npos) {
        std::size_t body = pos + begin.size();
        std::size_t stop = pem.find(end, body);
        if (stop == std::string_view::npos) throw MalformedDer("unterminated PEM block");
        out.push_back(base64_decode(pem.substr(body, stop - body)));
        pos = stop + end.size();
    }
    return out;
}

std::string der_to_pem(ByteView der) {
    std::string b64 = base64_encode(der);
    std::string out = "-----BEGIN CERTIFICATE-----\n";
    for (std::size_t i = 0; i < b64.size(); i += 64) out += b64.substr(i, 64) + "\n";
    out += "-----END CERTIFICATE-----\n";
    return out;
}

}  // namespace ctphish::cert
