#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace ctphish {

using UtcTime = std::chrono::sys_time<std::chrono::milliseconds>;

UtcTime utc_now();
UtcTime from_unix_ms(std::int64_t ms);
std::int64_t to_unix_ms(UtcTime t);

/// RFC 3339, UTC, e.g. "2020-05-01T00:00:00Z"; milliseconds are printed
/// only when non-zero.
std::string format_rfc3339(UtcTime t);

/// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM:SS[.fff](Z|+hh:mm|-hh:mm)" and a
/// space in place of 'T'. Throws std::invalid_argument otherwise.
UtcTime parse_rfc3339(std::string_view text);

/// Durations such as "90s", "15m", "1h", "12h", "2d", or a bare number of
/// seconds.
std::chrono::milliseconds parse_duration(std::string_view text);
std::string format_duration(std::chrono::milliseconds d);

}  // namespace ctphish
