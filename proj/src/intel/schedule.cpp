#include "ctphish/intel/schedule.hpp"

#include "ctphish/errors.hpp"

namespace ctphish::intel {

FeedSchedule FeedSchedule::defaults() {
    using std::chrono::hours;
    FeedSchedule s;
    s.set("phishtank", hours(1));
    s.set("phishstats", hours(1));
    s.set("prefixes", hours(1));
    s.set("openphish", hours(12));
    s.set("custom", hours(1));
    return s;
}

void FeedSchedule::set(const std::string& feed, std::chrono::milliseconds interval) {
    if (interval < k_min_interval) {
        throw ConfigError("feed interval for " + feed + " must be at least 1 minute");
    }
    intervals_[feed] = interval;
}

std::chrono::milliseconds FeedSchedule::interval(const std::string& feed) const {
    auto it = intervals_.find(feed);
    if (it != intervals_.end()) return it->second;
    return std::chrono::hours(1);
}

bool FeedSchedule::due(const std::string& feed, std::optional<UtcTime> last_fetch, UtcTime now) const {
    return !last_fetch || now - *last_fetch >= interval(feed);
}

std::vector<FeedRunReport> run_feeds(IntelStore& store, const std::vector<FeedDefinition>& feeds,
                                     const FeedSchedule& schedule, UtcTime now, bool force,
                                     const Fetcher& fetch) {
    std::vector<FeedRunReport> reports;
    for (const auto& feed : feeds) {
        FeedRunReport r;
        r.name = feed.name;
        if (!force && !schedule.due(feed.name, store.last_fetch(feed.name), now)) {
            reports.push_back(std::move(r));
            continue;
        }
        try {
            std::string raw = fetch(feed.url);
            if (feed.source) {
                auto ingest = store.ingest(*feed.source, raw, now);
                r.new_entries = ingest.new_entries.size();
                r.duplicates = ingest.duplicates;
                r.malformed = ingest.malformed;
            } else {
                auto set = PrefixSet::parse(raw);
                set.snapshot_time = now;
                r.prefixes_added = store.add_prefixes(set);
            }
            store.set_last_fetch(feed.name, now);
            r.fetched = true;
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        reports.push_back(std::move(r));
    }
    return reports;
}

}  // namespace ctphish::intel
