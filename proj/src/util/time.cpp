#include "ctphish/util/time.hpp"

#include <cctype>
#include <cstdio>
#include <ctime>
#include <stdexcept>

namespace ctphish {

using namespace std::chrono;

UtcTime utc_now() { return time_point_cast<milliseconds>(system_clock::now()); }

UtcTime from_unix_ms(std::int64_t ms) { return UtcTime{milliseconds{ms}}; }

std::int64_t to_unix_ms(UtcTime t) { return t.time_since_epoch().count(); }

std::string format_rfc3339(UtcTime t) {
    auto secs = floor<seconds>(t);
    auto ms = (t - secs).count();
    std::time_t tt = secs.time_since_epoch().count();
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[64];
    if (ms != 0) {
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                      tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                      static_cast<int>(ms));
    } else {
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                      tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    }
    return buf;
}

namespace {

bool read_int(std::string_view s, std::size_t& pos, std::size_t digits, int& out) {
    if (pos + digits > s.size()) return false;
    int v = 0;
    for (std::size_t i = 0; i < digits; ++i) {
        char c = s[pos + i];
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        v = v * 10 + (c - '0');
    }
    pos += digits;
    out = v;
    return true;
}

bool expect(std::string_view s, std::size_t& pos, char c) {
    if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
    }
    return false;
}

}  // namespace

UtcTime parse_rfc3339(std::string_view text) {
    auto fail = [&]() -> UtcTime {
        throw std::invalid_argument("invalid RFC 3339 timestamp: " + std::string(text));
    };
    std::size_t pos = 0;
    int year, month, day, hour = 0, minute = 0, second = 0, millis = 0;
    if (!read_int(text, pos, 4, year) || !expect(text, pos, '-') || !read_int(text, pos, 2, month) ||
        !expect(text, pos, '-') || !read_int(text, pos, 2, day)) {
        return fail();
    }
    int offset_minutes = 0;
    if (pos < text.size()) {
        if (text[pos] != 'T' && text[pos] != 't' && text[pos] != ' ') return fail();
        ++pos;
        if (!read_int(text, pos, 2, hour) || !expect(text, pos, ':') || !read_int(text, pos, 2, minute) ||
            !expect(text, pos, ':') || !read_int(text, pos, 2, second)) {
            return fail();
        }
        if (expect(text, pos, '.')) {
            int scale = 100;
            bool any = false;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
                millis += (text[pos] - '0') * scale;
                scale /= 10;
                ++pos;
                any = true;
            }
            if (!any) return fail();
        }
        if (pos >= text.size()) return fail();
        char z = text[pos];
        if (z == 'Z' || z == 'z') {
            ++pos;
        } else if (z == '+' || z == '-') {
            ++pos;
            int oh, om;
            if (!read_int(text, pos, 2, oh) || !expect(text, pos, ':') || !read_int(text, pos, 2, om)) {
                return fail();
            }
            offset_minutes = (oh * 60 + om) * (z == '+' ? 1 : -1);
        } else {
            return fail();
        }
        if (pos != text.size()) return fail();
    }
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60) {
        return fail();
    }
    year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                       std::chrono::day{static_cast<unsigned>(day)}};
    if (!ymd.ok()) return fail();
    sys_days d{ymd};
    auto t = time_point_cast<milliseconds>(d) + hours{hour} + minutes{minute} + seconds{second} +
             milliseconds{millis} - minutes{offset_minutes};
    return t;
}

std::chrono::milliseconds parse_duration(std::string_view text) {
    if (text.empty()) throw std::invalid_argument("empty duration");
    std::size_t i = 0;
    double value = 0;
    bool any = false;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        value = value * 10 + (text[i] - '0');
        ++i;
        any = true;
    }
    if (!any) throw std::invalid_argument("invalid duration: " + std::string(text));
    std::string_view unit = text.substr(i);
    double scale;
    if (unit.empty() || unit == "s") scale = 1000;
    else if (unit == "ms") scale = 1;
    else if (unit == "m") scale = 60'000;
    else if (unit == "h") scale = 3'600'000;
    else if (unit == "d") scale = 86'400'000;
    else throw std::invalid_argument("invalid duration unit: " + std::string(text));
    return milliseconds{static_cast<std::int64_t>(value * scale)};
}

std::string format_duration(std::chrono::milliseconds d) {
    auto ms = d.count();
    if (ms % 86'400'000 == 0 && ms != 0) return std::to_string(ms / 86'400'000) + "d";
    if (ms % 3'600'000 == 0 && ms != 0) return std::to_string(ms / 3'600'000) + "h";
    if (ms % 60'000 == 0 && ms != 0) return std::to_string(ms / 60'000) + "m";
    if (ms % 1000 == 0) return std::to_string(ms / 1000) + "s";
    return std::to_string(ms) + "ms";
}

}  // namespace ctphish
