#pragma once

#include <map>
#include <string>

#include "ctphish/cert/certificate.hpp"
#include "ctphish/util/json.hpp"

namespace ctphish::classifiers {

/// Additive heuristic over a certificate's domains and issuer.
struct RuleSet {
    std::map<std::string, double> keyword_weights;  ///< substring of the suffix-stripped name -> points
    std::map<std::string, double> suspicious_tlds;  ///< last label -> points
    std::size_t nesting_max_labels = 4;
    double nesting_points = 0.0;                    ///< per label beyond nesting_max_labels
    std::string issuer_substring = "Let's Encrypt";
    double issuer_points = 0.0;
    double cap = 140.0;

    /// Throws ConfigError on negative points or a non-positive cap.
    void validate() const;

    Json to_json() const;
    static RuleSet from_json(const Json& j);
    /// The bundled rules_default.json.
    static const RuleSet& bundled();
};

/// Unnormalized points of a certificate.
double rule_points(const cert::CertificateRecord& r, const RuleSet& rules);
/// min(1, points / cap).
double score_rules(const cert::CertificateRecord& r, const RuleSet& rules);

}  // namespace ctphish::classifiers
