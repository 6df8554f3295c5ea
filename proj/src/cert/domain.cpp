#include "ctphish/cert/domain.hpp"

#include <arpa/inet.h>

namespace ctphish::cert {

std::string normalize_domain(std::string_view name) {
    std::string out;
    out.reserve(name.size());
    for (char c : name) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        out.push_back(c);
    }
    if (!out.empty() && out.back() == '.') out.pop_back();
    return out;
}

bool is_ip_literal(std::string_view name) {
    std::string s(name);
    if (s.size() > 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
    unsigned char buf[16];
    return inet_pton(AF_INET, s.c_str(), buf) == 1 || inet_pton(AF_INET6, s.c_str(), buf) == 1;
}

std::vector<std::string> DomainName::host_labels() const {
    if (is_ip) return {};
    std::size_t suffix_labels = 0;
    if (!public_suffix.empty()) {
        suffix_labels = 1;
        for (char c : public_suffix) suffix_labels += c == '.';
    }
    std::vector<std::string> out;
    std::size_t stop = labels.size() >= suffix_labels ? labels.size() - suffix_labels : 0;
    for (std::size_t i = 0; i < stop; ++i) {
        if (i == 0 && is_wildcard) continue;
        out.push_back(labels[i]);
    }
    return out;
}

std::string DomainName::name_without_suffix() const {
    std::string out;
    for (const auto& label : host_labels()) {
        if (!out.empty()) out.push_back('.');
        out += label;
    }
    return out;
}

namespace {

std::vector<std::string> split_labels(const std::string& full) {
    std::vector<std::string> labels;
    std::size_t start = 0;
    while (true) {
        std::size_t dot = full.find('.', start);
        if (dot == std::string::npos) {
            labels.push_back(full.substr(start));
            break;
        }
        labels.push_back(full.substr(start, dot - start));
        start = dot + 1;
    }
    return labels;
}

std::string join(const std::vector<std::string>& labels, std::size_t first, std::size_t last) {
    std::string out;
    for (std::size_t i = first; i < last; ++i) {
        if (i != first) out.push_back('.');
        out += labels[i];
    }
    return out;
}

}  // namespace

DomainName decompose_domain(std::string_view name, const PublicSuffixList& psl) {
    DomainName d;
    for (char c : name) d.had_uppercase |= (c >= 'A' && c <= 'Z');
    d.full = normalize_domain(name);
    d.labels = split_labels(d.full);

    if (is_ip_literal(d.full)) {
        d.is_ip = true;
        d.registered_domain = d.full;
        for (char c : d.full) {
            if (c != '.') d.core.push_back(c);
        }
        return d;
    }

    d.is_wildcard = !d.labels.empty() && d.labels.front() == "*";
    for (const auto& label : d.labels) d.is_idn |= label.starts_with("xn--");

    auto match = psl.match(d.labels);
    const std::size_t n = d.labels.size();
    std::size_t suffix_labels = std::min(match.suffix_labels, n);
    d.has_valid_tld = match.explicit_rule;
    d.public_suffix = join(d.labels, n - suffix_labels, n);

    std::size_t host_end = n - suffix_labels;
    bool has_registrable = host_end > 0 && !(host_end == 1 && d.is_wildcard);
    d.registered_domain = has_registrable ? join(d.labels, host_end - 1, n) : d.public_suffix;

    for (std::size_t i = d.is_wildcard ? 1 : 0; i < host_end; ++i) d.core += d.labels[i];
    return d;
}

DomainName decompose_domain(std::string_view name) {
    return decompose_domain(name, PublicSuffixList::bundled());
}

}  // namespace ctphish::cert
