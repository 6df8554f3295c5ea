#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ctphish/cert/certificate.hpp"
#include "ctphish/cert/domain.hpp"
#include "ctphish/features/catalog.hpp"
#include "ctphish/util/json.hpp"

namespace ctphish::features {

/// Registered domain -> rank (1 = most popular).
class PopularRanks {
public:
    PopularRanks() = default;
    explicit PopularRanks(std::unordered_map<std::string, int> ranks) : ranks_(std::move(ranks)) {}
    /// "rank,domain" or bare "domain" lines; '#' comments.
    static PopularRanks parse(std::string_view text);
    static const PopularRanks& bundled();

    std::optional<int> rank(const std::string& registered_domain) const;
    bool contains(const std::string& registered_domain) const { return ranks_.contains(registered_domain); }
    std::size_t size() const { return ranks_.size(); }
    std::vector<std::string> domains() const;

private:
    std::unordered_map<std::string, int> ranks_;
};

/// Shared inputs of the extractor beyond the certificate itself.
struct Resources {
    std::vector<std::string> keywords;
    std::unordered_set<std::string> ev_oids;
    PopularRanks popular;

    static const Resources& bundled();
};

enum class ValidationLevel { dv, ov, ev };
ValidationLevel validation_level(const cert::CertificateRecord& r, const std::unordered_set<std::string>& ev_oids);

/// Issuer / key-algorithm encodings. Codes 1..K are assigned by descending
/// training frequency (ties by name); unseen values map to 0.
class CategoricalCodec {
public:
    static constexpr int k_unseen = 0;

    void observe(const cert::CertificateRecord& r);
    void freeze();
    bool frozen() const { return frozen_; }

    int issuer_code(const cert::CertificateRecord& r) const;
    int key_algorithm_code(cert::KeyAlgorithm a) const;

    /// Issuer category key: the issuer's O attribute, else its CN, else the DN.
    static std::string issuer_key(const std::string& issuer_dn);

    Json to_json() const;
    static CategoricalCodec from_json(const Json& j);

    static CategoricalCodec fit(std::span<const cert::CertificateRecord> records);

private:
    std::map<std::string, std::size_t> issuer_counts_;
    std::map<std::string, std::size_t> key_counts_;
    std::map<std::string, int> issuer_codes_;
    std::map<std::string, int> key_codes_;
    bool frozen_ = false;
};

using CertFeatures = std::array<double, k_cert_features>;
using DomainFeatures = std::array<double, k_domain_features>;
using KeywordFeatures = std::array<double, k_keyword_features>;

CertFeatures extract_cert_features(const cert::CertificateRecord& r, const CategoricalCodec& codec,
                                   const Resources& res = Resources::bundled());

DomainFeatures extract_domain_features(const cert::DomainName& d, const cert::DomainName& cn,
                                       std::span<const cert::DomainName> sans,
                                       const PopularRanks& popular = PopularRanks::bundled());

KeywordFeatures extract_keyword_features(const cert::DomainName& d,
                                         const std::vector<std::string>& kws = keywords());

/// One feature vector: a domain within a certificate, or a certificate-level
/// average (domain_index empty).
struct FeatureVector {
    std::vector<double> values;
    FeatureSet feature_set = FeatureSet::all;
    Sha256Digest fingerprint{};
    std::optional<std::size_t> domain_index;

    bool operator==(const FeatureVector&) const = default;
};

/// Restricts an all-features vector to a feature set.
FeatureVector project(const FeatureVector& all, FeatureSet target);

/// Coordinate-wise mean; throws EmptyInput.
FeatureVector average_vectors(std::span<const FeatureVector> per_domain);

class FeatureExtractor {
public:
    explicit FeatureExtractor(CategoricalCodec codec, const Resources& res = Resources::bundled());

    /// One vector per domain of the certificate ({CN} ∪ SANs, deduplicated).
    std::vector<FeatureVector> per_domain(const cert::CertificateRecord& r, FeatureSet set) const;
    /// Averaged certificate vector.
    FeatureVector cert_vector(const cert::CertificateRecord& r, FeatureSet set) const;

    const CategoricalCodec& codec() const { return codec_; }

private:
    CategoricalCodec codec_;
    const Resources* res_;
};

/// CSV with a header row of canonical names.
std::string to_csv(std::span<const FeatureVector> rows, const std::vector<std::string>* labels = nullptr);

}  // namespace ctphish::features
