#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ctphish/ctlog/leaf.hpp"
#include "ctphish/util/time.hpp"

namespace httplib {
class Client;
}

namespace ctphish::ctlog {

struct LogSource {
    std::string name;
    std::string base_url;  ///< e.g. https://ct.googleapis.com/logs/xenon2020
    std::optional<int> scope_year;
};

struct RetryPolicy {
    std::chrono::milliseconds base{1000};
    double factor = 2.0;
    std::chrono::milliseconds cap{60'000};
    int max_attempts = 8;
    std::chrono::milliseconds request_timeout{30'000};

    /// Delay before retry number `retry` (0-based).
    std::chrono::milliseconds delay(int retry) const;
};

struct SignedTreeHead {
    std::uint64_t tree_size = 0;
    UtcTime timestamp{};
    std::string root_hash;  ///< base64 as served
};

/// Entries of one [start, end) request with per-entry decode failures.
struct EntryBatch {
    std::uint64_t start = 0;
    std::uint64_t end = 0;
    std::vector<LogEntry> entries;
    std::vector<std::uint64_t> skipped;  ///< indices whose leaf failed to decode
};

struct ClientCounters {
    std::uint64_t requests = 0;
    std::uint64_t retries = 0;
    std::uint64_t truncated_pages = 0;
};

/// RFC 6962 v1 client for one log. Calls are serialized internally; use one
/// client per worker thread for parallel downloads.
class LogClient {
public:
    explicit LogClient(LogSource source, RetryPolicy policy = {});
    ~LogClient();
    LogClient(const LogClient&) = delete;
    LogClient& operator=(const LogClient&) = delete;

    const LogSource& source() const { return source_; }
    const RetryPolicy& policy() const { return policy_; }

    SignedTreeHead get_sth();
    /// Half-open range. Re-requests the remainder when the log truncates.
    EntryBatch get_entries(std::uint64_t start, std::uint64_t end);
    /// Timestamp of a single leaf.
    UtcTime leaf_timestamp(std::uint64_t index);

    ClientCounters counters() const;

    /// Replaces the sleep used between retries (tests).
    void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) { sleeper_ = std::move(sleeper); }

private:
    std::string get_json_body(const std::string& path);

    LogSource source_;
    RetryPolicy policy_;
    std::string path_prefix_;
    std::unique_ptr<httplib::Client> http_;
    std::function<void(std::chrono::milliseconds)> sleeper_;
    mutable std::mutex mu_;
    ClientCounters counters_;
};

/// Splits "scheme://host[:port][/path]" into origin and path (no trailing '/').
std::pair<std::string, std::string> split_base_url(const std::string& url);

}  // namespace ctphish::ctlog
