#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace ctphish::features {

/// Base-2 Shannon entropy of the character distribution; 0 for "".
double shannon_entropy(std::string_view s);

/// Statistics over the occurrence counts of distinct n-grams.
struct NgramStats {
    double std = 0;  ///< population standard deviation
    double median = 0;
    double mean = 0;  ///< total n-grams / distinct n-grams
    double min = 0;
    double max = 0;
    double bottom_quartile = 0;
    double top_quartile = 0;
};

/// All zeros when |s| < n.
NgramStats ngram_stats(std::string_view s, std::size_t n);

/// Linear interpolation between closest ranks at position p * (n - 1) of a
/// sorted sample.
double quantile_linear(const std::vector<double>& sorted, double p);

std::size_t levenshtein(std::string_view a, std::string_view b);

}  // namespace ctphish::features
