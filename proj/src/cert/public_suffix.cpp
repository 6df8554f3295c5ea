#include "ctphish/cert/public_suffix.hpp"

#include <algorithm>
#include <cstdint>

#include "ctphish/data.hpp"

namespace ctphish::cert {

namespace {

std::string join_from(std::span<const std::string> labels, std::size_t first) {
    std::string out;
    for (std::size_t i = first; i < labels.size(); ++i) {
        if (i != first) out.push_back('.');
        out += labels[i];
    }
    return out;
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::u32string utf8_decode(std::string_view s) {
    std::u32string out;
    for (std::size_t i = 0; i < s.size();) {
        auto c = static_cast<unsigned char>(s[i]);
        int extra = c < 0x80 ? 0 : c < 0xE0 ? 1 : c < 0xF0 ? 2 : 3;
        char32_t cp = extra == 0 ? c : c & (0x3F >> extra);
        for (int k = 1; k <= extra && i + k < s.size(); ++k) cp = (cp << 6) | (s[i + k] & 0x3F);
        out.push_back(cp);
        i += static_cast<std::size_t>(extra) + 1;
    }
    return out;
}

// RFC 3492 encoder.
std::string punycode(const std::u32string& input) {
    constexpr std::uint32_t base = 36, tmin = 1, tmax = 26, skew = 38, damp = 700;
    auto digit = [](std::uint32_t d) { return static_cast<char>(d < 26 ? 'a' + d : '0' + d - 26); };
    auto adapt = [&](std::uint32_t delta, std::uint32_t points, bool first) {
        delta = first ? delta / damp : delta / 2;
        delta += delta / points;
        std::uint32_t k = 0;
        while (delta > ((base - tmin) * tmax) / 2) {
            delta /= base - tmin;
            k += base;
        }
        return k + (base - tmin + 1) * delta / (delta + skew);
    };

    std::string out;
    for (char32_t c : input) {
        if (c < 0x80) out.push_back(static_cast<char>(c));
    }
    std::uint32_t h = static_cast<std::uint32_t>(out.size());
    const std::uint32_t b = h;
    if (b > 0) out.push_back('-');
    std::uint32_t n = 0x80, delta = 0, bias = 72;
    while (h < input.size()) {
        std::uint32_t m = UINT32_MAX;
        for (char32_t c : input) {
            if (c >= n && c < m) m = c;
        }
        delta += (m - n) * (h + 1);
        n = m;
        for (char32_t c : input) {
            if (c < n) ++delta;
            if (c != n) continue;
            std::uint32_t q = delta;
            for (std::uint32_t k = base;; k += base) {
                std::uint32_t t = k <= bias ? tmin : k >= bias + tmax ? tmax : k - bias;
                if (q < t) break;
                out.push_back(digit(t + (q - t) % (base - t)));
                q = (q - t) / (base - t);
            }
            out.push_back(digit(q));
            bias = adapt(delta, h + 1, h == b);
            delta = 0;
            ++h;
        }
        ++delta;
        ++n;
    }
    return out;
}

// Unicode rules are stored in their ACE form so they match names as they
// appear on the wire.
std::string to_ace(const std::string& rule) {
    std::string out;
    std::size_t start = 0;
    while (start <= rule.size()) {
        std::size_t dot = rule.find('.', start);
        if (dot == std::string::npos) dot = rule.size();
        std::string_view label(rule.data() + start, dot - start);
        if (!out.empty() || start != 0) out.push_back('.');
        bool ascii = std::all_of(label.begin(), label.end(), [](char c) { return (c & 0x80) == 0; });
        out += ascii ? std::string(label) : "xn--" + punycode(utf8_decode(label));
        start = dot + 1;
    }
    return out;
}

}  // namespace

PublicSuffixList PublicSuffixList::parse(std::string_view dat, Options options) {
    PublicSuffixList psl;
    bool in_private = false;
    std::size_t start = 0;
    while (start < dat.size()) {
        std::size_t end = dat.find('\n', start);
        if (end == std::string_view::npos) end = dat.size();
        std::string_view line = dat.substr(start, end - start);
        start = end + 1;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
        if (line.starts_with("//")) {
            if (line.find("===BEGIN PRIVATE DOMAINS===") != std::string_view::npos) in_private = true;
            if (line.find("===END PRIVATE DOMAINS===") != std::string_view::npos) in_private = false;
            if (auto v = line.find("VERSION: "); v != std::string_view::npos && psl.version_.empty()) {
                psl.version_ = std::string(line.substr(v + 9));
            }
            continue;
        }
        // A rule ends at the first whitespace.
        if (auto ws = line.find_first_of(" \t"); ws != std::string_view::npos) line = line.substr(0, ws);
        if (line.empty()) continue;
        if (in_private && !options.include_private) continue;
        std::string rule = to_ace(ascii_lower(line));
        if (rule.starts_with('!')) {
            psl.exceptions_.insert(rule.substr(1));
        } else if (rule.starts_with("*.")) {
            psl.wildcards_.insert(rule.substr(2));
        } else {
            psl.rules_.insert(std::move(rule));
        }
    }
    return psl;
}

const PublicSuffixList& PublicSuffixList::bundled() {
    static const PublicSuffixList psl = parse(data::load("public_suffix_list.dat"), Options{});
    return psl;
}

PublicSuffixList::Match PublicSuffixList::match(std::span<const std::string> labels) const {
    const std::size_t n = labels.size();
    // Longest candidate first; exception rules are always longer than the
    // wildcard they carve out of, so the first hit is the prevailing rule.
    for (std::size_t i = 0; i < n; ++i) {
        std::string candidate = join_from(labels, i);
        if (exceptions_.contains(candidate)) return {n - i - 1, true};
        if (rules_.contains(candidate)) return {n - i, true};
        if (i + 1 < n && wildcards_.contains(join_from(labels, i + 1))) return {n - i, true};
    }
    return {n == 0 ? 0 : std::size_t{1}, false};
}

bool PublicSuffixList::contains(std::string_view suffix) const {
    std::string s = ascii_lower(suffix);
    if (rules_.contains(s)) return true;
    auto dot = s.find('.');
    return dot != std::string::npos && wildcards_.contains(s.substr(dot + 1)) && !exceptions_.contains(s);
}

}  // namespace ctphish::cert
