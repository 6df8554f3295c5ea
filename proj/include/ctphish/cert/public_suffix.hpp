#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>

namespace ctphish::cert {

/// Mozilla public suffix list (normal, wildcard and exception rules).
class PublicSuffixList {
public:
    struct Options {
        bool include_private = false;
    };

    struct Match {
        std::size_t suffix_labels = 1;  ///< number of right-most labels forming the suffix
        bool explicit_rule = false;     ///< false when only the implicit "*" rule applied
    };

    static PublicSuffixList parse(std::string_view dat, Options options);
    static PublicSuffixList parse(std::string_view dat) { return parse(dat, Options{}); }

    /// The compiled-in snapshot, ICANN section only.
    static const PublicSuffixList& bundled();

    Match match(std::span<const std::string> labels) const;
    bool contains(std::string_view suffix) const;

    const std::string& version() const { return version_; }
    std::size_t rule_count() const { return rules_.size() + wildcards_.size() + exceptions_.size(); }

private:
    std::unordered_set<std::string> rules_;
    std::unordered_set<std::string> wildcards_;   // "*.ck" stored as "ck"
    std::unordered_set<std::string> exceptions_;  // "!www.ck" stored as "www.ck"
    std::string version_;
};

}  // namespace ctphish::cert
