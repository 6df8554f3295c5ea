#pragma once

// Published per-feature values for the two example certificates c0
// (anycast.ftl.netflix.com) and c1 (paypal-secured.ga).

#include <string_view>
#include <vector>

namespace testfx {

struct GoldenRow {
    std::string_view feature;
    double c0;
    double c1;
};

/// Certificate rows reconstructible from the example fields.
inline const std::vector<GoldenRow>& golden_cert_rows() {
    static const std::vector<GoldenRow> rows = {
        {"is_ov", 1, 0},           {"is_ev", 0, 0},          {"is_dv", 0, 1},
        {"sub_only_cn", 0, 1},     {"sub_dn_count", 6, 1},   {"sub_char_count", 64, 17},
        {"valid_period", 36, 90},  {"is_wildcard", 1, 0},    {"san_count", 7, 2},
        {"average_sd_count", 4.14286, 2.5}, {"san_tld_count", 2, 1}, {"key_size", 256, 2048},
    };
    return rows;
}

/// Domain rows derivable from the CN alone.
inline const std::vector<GoldenRow>& golden_domain_rows() {
    static const std::vector<GoldenRow> rows = {
        {"sub_cn_is_com", 1, 0},
        {"has_uppercase_letters", 0, 0},
        {"num_dash", 0, 1},
        {"num_dash_rd", 0, 1},
        {"num_tokens", 4, 3},
        {"tld_in_token", 1, 0},
        {"https_in_domain", 0, 0},
        {"longest_token", 7, 7},
        {"special_char_ratio", 0.13043, 0.11765},
        {"is_ip", 0, 0},
        {"is_idn_domain", 0, 0},
        {"vowel_ratio", 0.23529, 0.38462},
        {"digit_ratio", 0, 0},
        {"length", 23, 17},
        {"contains_wwwdot", 0, 0},
        {"contains_subdomain_of_only_digits", 0, 0},
        {"subdomain_lengths_mean", 5.66667, 14},
        {"parts", 3, 1},
        {"contains_digits", 0, 0},
        {"has_valid_tld", 1, 1},
        {"contains_one_char_subdomains", 0, 0},
        {"prefix_repetition", 0, 0},
        {"char_diversity", 0.64706, 0.78571},
        {"contains_tld_as_infix", 1, 0},
        {"alphabet_size", 11, 11},
        {"shannon_entropy", 3.33718, 3.37878},
        {"hex_part_ratio", 0, 0},
        {"underscore_ratio", 0, 0},
        {"ratio_of_repeated_chars", 0.45455, 0.27273},
        {"consecutive_digits_ratio", 0, 0},
        {"1_gram_std", 0.65555, 0.44536},
        {"1_gram_median", 1, 1},
        {"1_gram_mean", 1.54545, 1.27273},
        {"1_gram_min", 1, 1},
        {"1_gram_max", 3, 2},
        {"1_gram_bottom_quartile", 1, 1},
        {"1_gram_top_quartile", 2, 1.5},
        {"2_gram_std", 0.24944, 0.27639},
        {"2_gram_median", 1, 1},
        {"2_gram_mean", 1.06667, 1.08333},
        {"2_gram_min", 1, 1},
        {"2_gram_max", 2, 2},
        {"2_gram_bottom_quartile", 1, 1},
        {"2_gram_top_quartile", 1, 1},
        {"3_gram_std", 0, 0},
        {"3_gram_median", 1, 1},
        {"3_gram_mean", 1, 1},
        {"3_gram_min", 1, 1},
        {"3_gram_max", 1, 1},
        {"3_gram_bottom_quartile", 1, 1},
        {"3_gram_top_quartile", 1, 1},
    };
    return rows;
}

}  // namespace testfx
