#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ctphish/cert/public_suffix.hpp"

namespace ctphish::cert {

/// A domain name split into the pieces the feature catalog works on.
struct DomainName {
    std::string full;               ///< normalized: lowercase, one trailing dot stripped
    std::vector<std::string> labels;
    std::string public_suffix;
    std::string registered_domain;  ///< first registrable label plus suffix
    std::string core;               ///< labels left of the suffix, no dots, no "*" label
    bool is_wildcard = false;
    bool is_idn = false;
    bool is_ip = false;
    bool has_valid_tld = false;     ///< suffix matched an explicit list rule
    bool had_uppercase = false;     ///< raw input carried uppercase letters

    /// Labels left of the public suffix, excluding a leading "*".
    std::vector<std::string> host_labels() const;
    /// host_labels() joined with '.'.
    std::string name_without_suffix() const;

    bool operator==(const DomainName&) const = default;
};

std::string normalize_domain(std::string_view name);

bool is_ip_literal(std::string_view name);

DomainName decompose_domain(std::string_view name, const PublicSuffixList& psl);
DomainName decompose_domain(std::string_view name);

}  // namespace ctphish::cert
