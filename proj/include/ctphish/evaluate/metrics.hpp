#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ctphish/util/json.hpp"

namespace ctphish::evaluate {

enum class ItemLabel { benign, phish, unknown };
std::string_view to_string(ItemLabel l);
ItemLabel item_label_from_string(std::string_view s);

struct ScoredItem {
    double score = 0.0;
    ItemLabel label = ItemLabel::unknown;
    std::string id;                    ///< certificate fingerprint (hex), may be empty
    std::vector<std::string> domains;  ///< used by verifiers
};

struct ScoredSet {
    std::vector<ScoredItem> items;

    void add(double score, ItemLabel label) { items.push_back({score, label, {}, {}}); }
    std::size_t positives() const;  ///< phish items
    std::size_t negatives() const;  ///< benign and unknown items
};

struct RocPoint {
    double fpr;
    double tpr;
    double threshold;  ///< items with score >= threshold are flagged; +inf for the origin
    bool operator==(const RocPoint&) const = default;
};

/// Origin (+inf threshold), then one point per distinct score, descending.
/// Unknown labels count as negatives. Throws DegenerateSet.
std::vector<RocPoint> roc(const ScoredSet& set);

/// Smallest threshold whose empirical FPR (fp / negatives) is within the
/// target; above the top score when no score qualifies. Throws DegenerateSet
/// and std::invalid_argument for a target outside (0, 1).
double threshold_at_fpr(const ScoredSet& set, double target_fpr);

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
    double tpr() const { return positives ? static_cast<double>(tp) / static_cast<double>(positives) : 0.0; }
    double fpr() const { return negatives ? static_cast<double>(fp) / static_cast<double>(negatives) : 0.0; }
};
Confusion confusion_at(const ScoredSet& set, double threshold);

std::string roc_csv(const std::vector<RocPoint>& points);

/// Confirms an unknown-label item as phishing.
using Verify = std::function<bool(const ScoredItem&)>;

struct ClassifierResults {
    std::string name;
    ScoredSet set;
    /// Optional fixed thresholds per target FPR (e.g. from a validation set).
    std::map<double, double> thresholds;
};

struct OperatingPoint {
    std::string classifier;
    double target_fpr = 0.0;
    double threshold = 0.0;
    std::size_t flagged = 0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fp_budget = 0;   ///< ceil(target * negatives)
    std::size_t known_phish = 0;
    std::size_t negatives = 0;
    double tpr = 0.0;            ///< tp / known_phish, a lower bound
};

struct OperatingReport {
    std::vector<OperatingPoint> rows;

    std::string to_text() const;
    Json to_json() const;
};

/// Unknown items are labelled phish when the verifier confirms them. Thresholds
/// not supplied are computed on the resolved set.
OperatingReport report(const std::vector<ClassifierResults>& results, const std::vector<double>& targets,
                       const Verify& verifier = {});

/// Reads result lines carrying "score" and optional "label", "fingerprint" and
/// "domains" keys.
ScoredSet scored_set_from_jsonl(std::string_view text);

}  // namespace ctphish::evaluate
