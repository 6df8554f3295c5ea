#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctphish::features {

inline constexpr std::size_t k_cert_features = 22;
inline constexpr std::size_t k_domain_features = 55;
inline constexpr std::size_t k_keyword_count = 47;
inline constexpr std::size_t k_keyword_features = k_keyword_count + 2;
inline constexpr std::size_t k_all_features = k_cert_features + k_domain_features + k_keyword_features;
inline constexpr std::size_t k_selected_features = 50;

enum class FeatureSet { all, selected };
enum class Category { certificate, domain, keyword };
enum class OutputKind { binary, integer, rational };

std::string_view to_string(FeatureSet s);
FeatureSet feature_set_from_string(std::string_view s);

struct FeatureInfo {
    std::string name;
    Category category;
    OutputKind output;
    bool ratio = false;  ///< value confined to [0, 1]
};

/// Canonical order: certificate rows, domain rows, one flag per keyword,
/// has_any_keyword, keyword_count.
const std::vector<FeatureInfo>& catalog();
const std::vector<std::string>& feature_names();
std::optional<std::size_t> feature_index(std::string_view name);

/// The bundled keyword list (Table order, lowercase).
const std::vector<std::string>& keywords();

/// Catalog indices of the bundled "selected" preset, ascending.
const std::vector<std::size_t>& selected_indices();

/// Catalog indices making up a feature set.
std::vector<std::size_t> indices_of(FeatureSet s);
std::size_t dimension(FeatureSet s);

}  // namespace ctphish::features
