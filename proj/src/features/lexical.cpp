#include "ctphish/features/lexical.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

namespace ctphish::features {

double shannon_entropy(std::string_view s) {
    if (s.empty()) return 0.0;
    std::array<std::size_t, 256> counts{};
    for (unsigned char c : s) ++counts[c];
    const double n = static_cast<double>(s.size());
    double h = 0.0;
    for (auto c : counts) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

double quantile_linear(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    double pos = p * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

NgramStats ngram_stats(std::string_view s, std::size_t n) {
    NgramStats st;
    if (n == 0 || s.size() < n) return st;
    std::unordered_map<std::string_view, std::size_t> counts;
    for (std::size_t i = 0; i + n <= s.size(); ++i) ++counts[s.substr(i, n)];

    std::vector<double> v;
    v.reserve(counts.size());
    for (const auto& [_, c] : counts) v.push_back(static_cast<double>(c));
    std::sort(v.begin(), v.end());

    const double k = static_cast<double>(v.size());
    const double total = static_cast<double>(s.size() - n + 1);
    st.mean = total / k;
    double ss = 0.0;
    for (double x : v) ss += (x - st.mean) * (x - st.mean);
    st.std = std::sqrt(ss / k);
    st.min = v.front();
    st.max = v.back();
    st.median = quantile_linear(v, 0.5);
    st.bottom_quartile = quantile_linear(v, 0.25);
    st.top_quartile = quantile_linear(v, 0.75);
    return st;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
    std::vector<std::size_t> row(b.size() + 1);
    std::iota(row.begin(), row.end(), std::size_t{0});
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

}  // namespace ctphish::features
