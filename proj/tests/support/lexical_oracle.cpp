#include "support/lexical_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

namespace {

double percentile(const std::vector<long>& v, double p) {
    double pos = p * static_cast<double>(v.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = static_cast<std::size_t>(std::ceil(pos));
    double frac = pos - static_cast<double>(lo);
    return static_cast<double>(v[lo]) + frac * static_cast<double>(v[hi] - v[lo]);
}

}  // namespace

std::array<double, 7> ngram_stats(const std::string& s, std::size_t n) {
    if (s.size() < n) return {};
    // Enumerate every n-gram, then count each distinct one by scanning.
    std::vector<std::string> grams;
    for (std::size_t i = 0; i + n <= s.size(); ++i) grams.push_back(s.substr(i, n));
    std::vector<std::string> distinct;
    for (const auto& g : grams) {
        if (std::find(distinct.begin(), distinct.end(), g) == distinct.end()) distinct.push_back(g);
    }
    std::vector<long> counts;
    for (const auto& d : distinct) counts.push_back(std::count(grams.begin(), grams.end(), d));
    std::sort(counts.begin(), counts.end());

    double k = static_cast<double>(counts.size());
    double mean = static_cast<double>(grams.size()) / k;
    double ss = 0;
    for (long c : counts) ss += (static_cast<double>(c) - mean) * (static_cast<double>(c) - mean);
    return {std::sqrt(ss / k),        percentile(counts, 0.5), mean, static_cast<double>(counts.front()),
            static_cast<double>(counts.back()), percentile(counts, 0.25), percentile(counts, 0.75)};
}

double entropy(const std::string& s) {
    if (s.empty()) return 0;
    double h = 0;
    for (int c = 0; c < 256; ++c) {
        auto k = std::count(s.begin(), s.end(), static_cast<char>(c));
        if (k == 0) continue;
        double p = static_cast<double>(k) / static_cast<double>(s.size());
        h += p * std::log2(1.0 / p);
    }
    return h;
}

}  // namespace oracle
