#include "ctphish/fixtures/cert_factory.hpp"

#include <openssl/bn.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/x509.h>
#include <openssl/x509v3.h>

#include <stdexcept>

namespace ctphish::fixtures {

namespace {

struct PkeyDeleter {
    void operator()(EVP_PKEY* k) const { EVP_PKEY_free(k); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;

struct X509Deleter {
    void operator()(X509* x) const { X509_free(x); }
};

PkeyPtr generate(KeyKind kind) {
    EVP_PKEY* key = nullptr;
    switch (kind) {
        case KeyKind::ec_p256: key = EVP_EC_gen("P-256"); break;
        case KeyKind::rsa2048: key = EVP_RSA_gen(2048); break;
        case KeyKind::ed25519: key = EVP_PKEY_Q_keygen(nullptr, nullptr, "ED25519"); break;
    }
    if (key == nullptr) throw std::runtime_error("key generation failed");
    return PkeyPtr(key);
}

void add_name(X509_NAME* name, const std::vector<std::pair<std::string, std::string>>& attrs) {
    for (const auto& [field, value] : attrs) {
        if (X509_NAME_add_entry_by_txt(name, field.c_str(), MBSTRING_UTF8,
                                       reinterpret_cast<const unsigned char*>(value.c_str()), -1, -1,
                                       0) != 1) {
            throw std::runtime_error("cannot add name attribute " + field);
        }
    }
}

void add_ext(X509* cert, X509V3_CTX* ctx, int nid, const std::string& value) {
    X509_EXTENSION* ext = X509V3_EXT_nconf_nid(nullptr, ctx, nid, value.c_str());
    if (ext == nullptr) throw std::runtime_error("cannot build extension " + value);
    X509_add_ext(cert, ext, -1);
    X509_EXTENSION_free(ext);
}

}  // namespace

struct CertFactory::Keys {
    PkeyPtr issuer;
    PkeyPtr subject[3];

    EVP_PKEY* get(KeyKind kind) {
        auto& slot = subject[static_cast<int>(kind)];
        if (!slot) slot = generate(kind);
        return slot.get();
    }
};

CertFactory::CertFactory() : keys_(std::make_unique<Keys>()) { keys_->issuer = generate(KeyKind::ec_p256); }

CertFactory::~CertFactory() = default;

Bytes CertFactory::make_der(const CertSpec& spec) {
    std::unique_ptr<X509, X509Deleter> cert(X509_new());
    X509_set_version(cert.get(), 2);
    ASN1_INTEGER_set_uint64(X509_get_serialNumber(cert.get()), spec.serial);

    auto to_secs = [](UtcTime t) { return static_cast<time_t>(to_unix_ms(t) / 1000); };
    ASN1_TIME_set(X509_getm_notBefore(cert.get()), to_secs(spec.not_before));
    ASN1_TIME_set(X509_getm_notAfter(cert.get()), to_secs(spec.not_after));

    add_name(X509_get_subject_name(cert.get()), spec.subject);
    add_name(X509_get_issuer_name(cert.get()), spec.issuer);
    X509_set_pubkey(cert.get(), keys_->get(spec.key));

    X509V3_CTX ctx;
    X509V3_set_ctx_nodb(&ctx);
    X509V3_set_ctx(&ctx, cert.get(), cert.get(), nullptr, nullptr, 0);

    if (!spec.dns_sans.empty()) {
        std::string value;
        for (const auto& san : spec.dns_sans) {
            if (!value.empty()) value += ",";
            value += "DNS:" + san;
        }
        add_ext(cert.get(), &ctx, NID_subject_alt_name, value);
    }
    if (!spec.policy_oids.empty()) {
        CERTIFICATEPOLICIES* policies = sk_POLICYINFO_new_null();
        for (const auto& oid : spec.policy_oids) {
            POLICYINFO* info = POLICYINFO_new();
            info->policyid = OBJ_txt2obj(oid.c_str(), 1);
            if (info->policyid == nullptr) {
                POLICYINFO_free(info);
                CERTIFICATEPOLICIES_free(policies);
                throw std::runtime_error("bad policy OID " + oid);
            }
            sk_POLICYINFO_push(policies, info);
        }
        X509_add1_ext_i2d(cert.get(), NID_certificate_policies, policies, 0, X509V3_ADD_APPEND);
        CERTIFICATEPOLICIES_free(policies);
    }
    if (!spec.ocsp_url.empty()) add_ext(cert.get(), &ctx, NID_info_access, "OCSP;URI:" + spec.ocsp_url);
    if (!spec.crl_url.empty()) add_ext(cert.get(), &ctx, NID_crl_distribution_points, "URI:" + spec.crl_url);
    if (spec.precert_poison) add_ext(cert.get(), &ctx, NID_ct_precert_poison, "critical,NULL");

    if (X509_sign(cert.get(), keys_->issuer.get(), EVP_sha256()) == 0) {
        throw std::runtime_error("certificate signing failed");
    }
    int len = i2d_X509(cert.get(), nullptr);
    Bytes der(static_cast<std::size_t>(len));
    unsigned char* p = der.data();
    i2d_X509(cert.get(), &p);
    return der;
}

std::string CertFactory::private_key_pem(KeyKind kind) {
    BIO* bio = BIO_new(BIO_s_mem());
    PEM_write_bio_PrivateKey(bio, keys_->get(kind), nullptr, nullptr, 0, nullptr, nullptr);
    char* data = nullptr;
    long len = BIO_get_mem_data(bio, &data);
    std::string pem(data, static_cast<std::size_t>(len));
    BIO_free(bio);
    return pem;
}

Bytes CertFactory::tbs_of(ByteView der) {
    const unsigned char* p = der.data();
    std::unique_ptr<X509, X509Deleter> cert(d2i_X509(nullptr, &p, static_cast<long>(der.size())));
    if (!cert) throw std::invalid_argument("not a certificate");
    unsigned char* out = nullptr;
    int len = i2d_re_X509_tbs(cert.get(), &out);
    if (len <= 0) throw std::runtime_error("cannot encode TBSCertificate");
    Bytes tbs(out, out + len);
    OPENSSL_free(out);
    return tbs;
}

}  // namespace ctphish::fixtures
