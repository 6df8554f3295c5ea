#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctphish/intel/store.hpp"

namespace ctphish::intel {

/// Fetch interval per feed name. Intervals below one minute are rejected.
class FeedSchedule {
public:
    static constexpr std::chrono::minutes k_min_interval{1};

    /// phishtank, phishstats and prefixes hourly; openphish every 12 hours.
    static FeedSchedule defaults();

    void set(const std::string& feed, std::chrono::milliseconds interval);
    std::chrono::milliseconds interval(const std::string& feed) const;
    bool due(const std::string& feed, std::optional<UtcTime> last_fetch, UtcTime now) const;
    const std::map<std::string, std::chrono::milliseconds>& intervals() const { return intervals_; }

private:
    std::map<std::string, std::chrono::milliseconds> intervals_;
};

/// A configured feed. `source` is empty for hash-prefix lists.
struct FeedDefinition {
    std::string name;
    std::optional<FeedSource> source;
    std::string url;  ///< http(s)://, file:// or a local path
};

struct FeedRunReport {
    std::string name;
    bool fetched = false;
    std::size_t new_entries = 0;
    std::size_t duplicates = 0;
    std::size_t malformed = 0;
    std::size_t prefixes_added = 0;
    std::string error;
};

using Fetcher = std::function<std::string(const std::string& url)>;

/// Fetches every due feed (all feeds when `force`) and writes into the store.
/// A failing feed is reported and does not stop the others.
std::vector<FeedRunReport> run_feeds(IntelStore& store, const std::vector<FeedDefinition>& feeds,
                                     const FeedSchedule& schedule, UtcTime now, bool force,
                                     const Fetcher& fetch);

}  // namespace ctphish::intel
