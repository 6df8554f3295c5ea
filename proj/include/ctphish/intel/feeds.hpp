#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctphish/util/time.hpp"

namespace ctphish::intel {

enum class FeedSource { phishtank, phishstats, openphish, custom };

std::string_view to_string(FeedSource s);
FeedSource feed_source_from_string(std::string_view s);

struct IntelEntry {
    std::string url;
    std::string host;  ///< lowercase
    std::string registered_domain;
    FeedSource source = FeedSource::custom;
    UtcTime first_seen{};
    UtcTime last_fetched{};

    bool operator==(const IntelEntry&) const = default;
};

struct ParsedFeed {
    std::vector<IntelEntry> entries;  ///< deduplicated by url
    std::size_t malformed = 0;
};

/// Lowercase host of a URL or bare host name; nullopt when none can be
/// extracted. Strips scheme, userinfo, port, path and a trailing dot.
std::optional<std::string> host_of_url(std::string_view url);

/// Builds an entry from a URL; nullopt for malformed URLs.
std::optional<IntelEntry> make_entry(std::string_view url, FeedSource source, UtcTime fetched_at,
                                     std::optional<UtcTime> first_seen = std::nullopt);

/// Parses a feed payload in the source's native format:
///  - openphish: plain text, one URL per line
///  - phishtank: CSV with a "url" header column, or a JSON array of objects
///  - phishstats: JSON array of objects with "url", or CSV rows (date,score,url,ip)
///  - custom: one URL or host per line, '#' comments
/// Empty payloads yield no entries. Throws UnknownFormat when a non-empty
/// payload matches no parser for the source.
ParsedFeed parse_feed(FeedSource source, std::string_view raw, UtcTime fetched_at);

/// RFC 4180 field splitting for one CSV record.
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace ctphish::intel
