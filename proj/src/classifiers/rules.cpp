#include "ctphish/classifiers/rules.hpp"

#include <algorithm>

#include "ctphish/cert/domain.hpp"
#include "ctphish/data.hpp"
#include "ctphish/errors.hpp"

namespace ctphish::classifiers {

void RuleSet::validate() const {
    auto nonneg = [](const std::map<std::string, double>& m, const char* what) {
        for (const auto& [k, v] : m) {
            if (!(v >= 0)) throw ConfigError(std::string(what) + " '" + k + "' has negative points");
            if (k.empty()) throw ConfigError(std::string(what) + " with empty key");
        }
    };
    nonneg(keyword_weights, "keyword");
    nonneg(suspicious_tlds, "tld");
    if (!(nesting_points >= 0) || !(issuer_points >= 0)) throw ConfigError("rule points must be >= 0");
    if (!(cap > 0)) throw ConfigError("rule cap must be > 0");
}

Json RuleSet::to_json() const {
    return Json{{"version", 1},
                {"cap", cap},
                {"keywords", keyword_weights},
                {"tlds", suspicious_tlds},
                {"nesting", {{"max_labels", nesting_max_labels}, {"points_per_label", nesting_points}}},
                {"issuer", {{"substring", issuer_substring}, {"points", issuer_points}}}};
}

RuleSet RuleSet::from_json(const Json& j) {
    RuleSet r;
    try {
        r.cap = j.value("cap", 140.0);
        if (j.contains("keywords")) r.keyword_weights = j.at("keywords").get<std::map<std::string, double>>();
        if (j.contains("tlds")) {
            for (auto& [k, v] : j.at("tlds").get<std::map<std::string, double>>()) {
                std::string key = k;
                if (!key.empty() && key.front() == '.') key.erase(0, 1);
                r.suspicious_tlds[key] = v;
            }
        }
        if (j.contains("nesting")) {
            r.nesting_max_labels = j.at("nesting").value("max_labels", std::size_t{4});
            r.nesting_points = j.at("nesting").value("points_per_label", 0.0);
        }
        if (j.contains("issuer")) {
            r.issuer_substring = j.at("issuer").value("substring", std::string("Let's Encrypt"));
            r.issuer_points = j.at("issuer").value("points", 0.0);
        }
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("rule set: ") + e.what());
    }
    for (auto& [k, v] : std::map<std::string, double>(r.keyword_weights)) {
        std::string lower = k;
        std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
        if (lower != k) {
            r.keyword_weights.erase(k);
            r.keyword_weights[lower] = v;
        }
    }
    r.validate();
    return r;
}

const RuleSet& RuleSet::bundled() {
    static const RuleSet r = from_json(Json::parse(data::load("rules_default.json")));
    return r;
}

double rule_points(const cert::CertificateRecord& r, const RuleSet& rules) {
    double points = 0.0;
    for (const auto& name : r.domains()) {
        auto d = cert::decompose_domain(name);
        const std::string scanned = d.is_ip ? d.full : d.name_without_suffix();
        for (const auto& [kw, p] : rules.keyword_weights) {
            if (scanned.find(kw) != std::string::npos) points += p;
        }
        if (!d.is_ip && !d.labels.empty()) {
            if (auto it = rules.suspicious_tlds.find(d.labels.back()); it != rules.suspicious_tlds.end()) {
                points += it->second;
            }
        }
        if (d.labels.size() > rules.nesting_max_labels) {
            points += rules.nesting_points * static_cast<double>(d.labels.size() - rules.nesting_max_labels);
        }
    }
    if (!rules.issuer_substring.empty() && r.issuer_dn.find(rules.issuer_substring) != std::string::npos) {
        points += rules.issuer_points;
    }
    return points;
}

double score_rules(const cert::CertificateRecord& r, const RuleSet& rules) {
    return std::min(1.0, rule_points(r, rules) / rules.cap);
}

}  // namespace ctphish::classifiers
