#include "ctphish/features/catalog.hpp"

#include <numeric>
#include <stdexcept>

#include "ctphish/data.hpp"

namespace ctphish::features {

std::string_view to_string(FeatureSet s) { return s == FeatureSet::all ? "all" : "selected"; }

FeatureSet feature_set_from_string(std::string_view s) {
    if (s == "all") return FeatureSet::all;
    if (s == "selected") return FeatureSet::selected;
    throw std::invalid_argument("unknown feature set: " + std::string(s));
}

namespace {

using O = OutputKind;

struct Row {
    const char* name;
    OutputKind output;
    bool ratio;
};

constexpr Row k_cert_rows[] = {
    {"is_ov", O::binary, false},          {"is_ev", O::binary, false},
    {"is_dv", O::binary, false},          {"sub_has_c", O::binary, false},
    {"sub_has_st", O::binary, false},     {"sub_has_l", O::binary, false},
    {"sub_only_cn", O::binary, false},    {"sub_has_cn", O::binary, false},
    {"sub_dn_count", O::integer, false},  {"sub_char_count", O::integer, false},
    {"sub_ext_count", O::integer, false}, {"valid_period", O::integer, false},
    {"policies_count", O::integer, false}, {"is_wildcard", O::binary, false},
    {"has_ocsp", O::binary, false},       {"has_cdp", O::binary, false},
    {"san_count", O::integer, false},     {"average_sd_count", O::rational, false},
    {"san_tld_count", O::integer, false}, {"key_algorithm", O::integer, false},
    {"key_size", O::integer, false},      {"issuer", O::integer, false},
};

constexpr Row k_domain_rows[] = {
    {"sub_cn_entropy", O::rational, false},
    {"sub_cn_is_com", O::binary, false},
    {"name_san_entropy", O::rational, false},
    {"has_uppercase_letters", O::binary, false},
    {"num_dash", O::integer, false},
    {"num_dash_rd", O::integer, false},
    {"num_tokens", O::integer, false},
    {"tld_in_token", O::binary, false},
    {"https_in_domain", O::binary, false},
    {"longest_token", O::integer, false},
    {"special_char_ratio", O::rational, true},
    {"is_ip", O::binary, false},
    {"is_idn_domain", O::binary, false},
    {"san_to_alexa_entropy", O::rational, false},
    {"vowel_ratio", O::rational, true},
    {"digit_ratio", O::rational, true},
    {"length", O::integer, false},
    {"contains_wwwdot", O::binary, false},
    {"contains_subdomain_of_only_digits", O::binary, false},
    {"subdomain_lengths_mean", O::rational, false},
    {"parts", O::integer, false},
    {"contains_digits", O::binary, false},
    {"has_valid_tld", O::binary, false},
    {"contains_one_char_subdomains", O::binary, false},
    {"prefix_repetition", O::binary, false},
    {"char_diversity", O::rational, true},
    {"contains_tld_as_infix", O::binary, false},
    {"alphabet_size", O::integer, false},
    {"shannon_entropy", O::rational, false},
    {"hex_part_ratio", O::rational, true},
    {"underscore_ratio", O::rational, true},
    {"ratio_of_repeated_chars", O::rational, true},
    {"consecutive_consonant_ratio", O::rational, true},
    {"consecutive_digits_ratio", O::rational, true},
};

std::vector<FeatureInfo> build_catalog() {
    std::vector<FeatureInfo> out;
    for (const auto& r : k_cert_rows) out.push_back({r.name, Category::certificate, r.output, r.ratio});
    for (const auto& r : k_domain_rows) out.push_back({r.name, Category::domain, r.output, r.ratio});
    for (int n = 1; n <= 3; ++n) {
        std::string p = std::to_string(n) + "_gram_";
        out.push_back({p + "std", Category::domain, O::rational, false});
        out.push_back({p + "median", Category::domain, O::integer, false});
        out.push_back({p + "mean", Category::domain, O::rational, false});
        out.push_back({p + "min", Category::domain, O::integer, false});
        out.push_back({p + "max", Category::domain, O::integer, false});
        out.push_back({p + "bottom_quartile", Category::domain, O::rational, false});
        out.push_back({p + "top_quartile", Category::domain, O::rational, false});
    }
    for (const auto& kw : keywords()) out.push_back({"kw_" + kw, Category::keyword, O::binary, false});
    out.push_back({"has_any_keyword", Category::keyword, O::binary, false});
    out.push_back({"keyword_count", Category::keyword, O::integer, false});
    if (out.size() != k_all_features) throw std::logic_error("feature catalog size mismatch");
    return out;
}

}  // namespace

const std::vector<std::string>& keywords() {
    static const std::vector<std::string> kws = [] {
        auto v = data::lines(data::load("keywords.txt"));
        if (v.size() != k_keyword_count) throw std::runtime_error("keywords.txt must list 47 keywords");
        return v;
    }();
    return kws;
}

const std::vector<FeatureInfo>& catalog() {
    static const std::vector<FeatureInfo> c = build_catalog();
    return c;
}

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& f : catalog()) v.push_back(f.name);
        return v;
    }();
    return names;
}

std::optional<std::size_t> feature_index(std::string_view name) {
    const auto& names = feature_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    return std::nullopt;
}

const std::vector<std::size_t>& selected_indices() {
    static const std::vector<std::size_t> idx = [] {
        std::vector<std::size_t> v;
        for (const auto& name : data::lines(data::load("selected_features.txt"))) {
            auto i = feature_index(name);
            if (!i) throw std::runtime_error("selected_features.txt: unknown feature " + name);
            if (!v.empty() && *i <= v.back()) throw std::runtime_error("selected_features.txt must follow catalog order");
            v.push_back(*i);
        }
        if (v.size() != k_selected_features) throw std::runtime_error("selected preset must list 50 features");
        return v;
    }();
    return idx;
}

std::vector<std::size_t> indices_of(FeatureSet s) {
    if (s == FeatureSet::selected) return selected_indices();
    std::vector<std::size_t> all(k_all_features);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
}

std::size_t dimension(FeatureSet s) { return s == FeatureSet::all ? k_all_features : k_selected_features; }

}  // namespace ctphish::features
