#include "ctphish/evaluate/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ctphish/errors.hpp"

namespace ctphish::evaluate {

std::string_view to_string(ItemLabel l) {
    switch (l) {
        case ItemLabel::benign: return "benign";
        case ItemLabel::phish: return "phish";
        case ItemLabel::unknown: return "unknown";
    }
    return "unknown";
}

ItemLabel item_label_from_string(std::string_view s) {
    if (s == "benign") return ItemLabel::benign;
    if (s == "phish" || s == "phishing") return ItemLabel::phish;
    if (s == "unknown" || s.empty()) return ItemLabel::unknown;
    throw std::invalid_argument("unknown label: " + std::string(s));
}

std::size_t ScoredSet::positives() const {
    return static_cast<std::size_t>(
        std::count_if(items.begin(), items.end(), [](const auto& i) { return i.label == ItemLabel::phish; }));
}

std::size_t ScoredSet::negatives() const { return items.size() - positives(); }

namespace {

struct Tally {
    double score;
    std::size_t pos = 0;
    std::size_t neg = 0;
};

// Per distinct score, descending, with positive and negative counts.
std::vector<Tally> tallies(const ScoredSet& set) {
    std::vector<std::pair<double, bool>> v;
    v.reserve(set.items.size());
    for (const auto& i : set.items) {
        if (!std::isfinite(i.score)) throw std::invalid_argument("scores must be finite");
        v.emplace_back(i.score, i.label == ItemLabel::phish);
    }
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<Tally> out;
    for (const auto& [s, p] : v) {
        if (out.empty() || out.back().score != s) out.push_back({s});
        (p ? out.back().pos : out.back().neg) += 1;
    }
    return out;
}

void require_both(const ScoredSet& set) {
    if (set.positives() == 0 || set.negatives() == 0) {
        throw DegenerateSet("scored set needs at least one positive and one negative item");
    }
}

}  // namespace

std::vector<RocPoint> roc(const ScoredSet& set) {
    require_both(set);
    const double p = static_cast<double>(set.positives()), n = static_cast<double>(set.negatives());
    std::vector<RocPoint> out{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
    std::size_t tp = 0, fp = 0;
    for (const auto& t : tallies(set)) {
        tp += t.pos;
        fp += t.neg;
        out.push_back({static_cast<double>(fp) / n, static_cast<double>(tp) / p, t.score});
    }
    return out;
}

double threshold_at_fpr(const ScoredSet& set, double target_fpr) {
    if (!(target_fpr > 0 && target_fpr < 1)) throw std::invalid_argument("target FPR must lie in (0, 1)");
    require_both(set);
    const auto n = set.negatives();
    // Largest fp with fp / n <= target, using the same division as the check.
    const double nd = static_cast<double>(n);
    auto budget = static_cast<std::size_t>(std::floor(target_fpr * nd));
    while (budget + 1 <= n && static_cast<double>(budget + 1) / nd <= target_fpr) ++budget;
    while (budget > 0 && static_cast<double>(budget) / nd > target_fpr) --budget;
    auto ts = tallies(set);
    double best = std::nextafter(ts.front().score, std::numeric_limits<double>::infinity());
    std::size_t fp = 0;
    for (const auto& t : ts) {
        fp += t.neg;
        if (fp > budget) break;
        best = t.score;
    }
    return best;
}

Confusion confusion_at(const ScoredSet& set, double threshold) {
    Confusion c;
    for (const auto& i : set.items) {
        bool pos = i.label == ItemLabel::phish;
        (pos ? c.positives : c.negatives) += 1;
        if (i.score >= threshold) (pos ? c.tp : c.fp) += 1;
    }
    return c;
}

std::string roc_csv(const std::vector<RocPoint>& points) {
    std::string out = "threshold,fpr,tpr\n";
    char buf[96];
    for (const auto& p : points) {
        if (std::isinf(p.threshold)) {
            std::snprintf(buf, sizeof buf, "inf,%.17g,%.17g\n", p.fpr, p.tpr);
        } else {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.threshold, p.fpr, p.tpr);
        }
        out += buf;
    }
    return out;
}

OperatingReport report(const std::vector<ClassifierResults>& results, const std::vector<double>& targets,
                       const Verify& verifier) {
    OperatingReport rep;
    for (const auto& r : results) {
        ScoredSet resolved = r.set;
        for (auto& item : resolved.items) {
            if (item.label == ItemLabel::unknown && verifier && verifier(item)) item.label = ItemLabel::phish;
        }
        const std::size_t known = resolved.positives();
        const std::size_t negatives = resolved.negatives();
        for (double target : targets) {
            OperatingPoint op;
            op.classifier = r.name;
            op.target_fpr = target;
            op.known_phish = known;
            op.negatives = negatives;
            op.fp_budget = static_cast<std::size_t>(std::ceil(target * static_cast<double>(negatives) - 1e-9));
            if (auto it = r.thresholds.find(target); it != r.thresholds.end()) {
                op.threshold = it->second;
            } else if (known > 0 && negatives > 0) {
                op.threshold = threshold_at_fpr(resolved, target);
            } else {
                op.threshold = std::numeric_limits<double>::infinity();
            }
            auto c = confusion_at(resolved, op.threshold);
            op.tp = c.tp;
            op.fp = c.fp;
            op.flagged = c.tp + c.fp;
            op.tpr = c.tpr();
            rep.rows.push_back(op);
        }
    }
    return rep;
}

std::string OperatingReport::to_text() const {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-20s %9s %10s %8s %8s %8s %8s %8s\n", "classifier", "FPR", "threshold", "flagged",
                  "#TP", "TPR", "#FP", "budget");
    out += buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-20s %9.0e %10.6f %8zu %8zu %8.4f %8zu %8zu\n", r.classifier.c_str(),
                      r.target_fpr, r.threshold, r.flagged, r.tp, r.tpr, r.fp, r.fp_budget);
        out += buf;
    }
    return out;
}

Json OperatingReport::to_json() const {
    Json rows_json = Json::array();
    for (const auto& r : rows) {
        Json threshold = std::isfinite(r.threshold) ? Json(r.threshold) : Json(nullptr);
        rows_json.push_back({{"classifier", r.classifier},
                             {"target_fpr", r.target_fpr},
                             {"threshold", threshold},
                             {"flagged", r.flagged},
                             {"tp", r.tp},
                             {"fp", r.fp},
                             {"fp_budget", r.fp_budget},
                             {"known_phish", r.known_phish},
                             {"negatives", r.negatives},
                             {"tpr", r.tpr}});
    }
    return Json{{"rows", rows_json}};
}

ScoredSet scored_set_from_jsonl(std::string_view text) {
    ScoredSet set;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            auto j = Json::parse(line);
            ScoredItem item;
            item.score = j.at("score").get<double>();
            item.label = item_label_from_string(j.value("label", "unknown"));
            item.id = j.value("fingerprint", "");
            if (j.contains("domains")) item.domains = j.at("domains").get<std::vector<std::string>>();
            set.items.push_back(std::move(item));
        } catch (const Json::exception& e) {
            throw std::invalid_argument("results line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return set;
}

}  // namespace ctphish::evaluate
