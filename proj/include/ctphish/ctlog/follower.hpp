#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "ctphish/ctlog/fetcher.hpp"

namespace ctphish::ctlog {

/// Per-log "next index" cursors persisted to a JSON file (kept in memory
/// only when the path is empty). Single writer.
class CursorStore {
public:
    explicit CursorStore(std::string path);

    std::optional<std::uint64_t> get(const std::string& log) const;
    void set(const std::string& log, std::uint64_t next_index);
    const std::string& path() const { return path_; }

private:
    std::string path_;
    mutable std::mutex mu_;
    std::map<std::string, std::uint64_t> cursors_;
};

struct FollowOptions {
    std::chrono::milliseconds poll_interval{10'000};
    FetchOptions fetch;
    /// Index to start from when no cursor exists; default: current tree size.
    std::optional<std::uint64_t> start_index;
    /// Stop after this many polls (including the first); unlimited if unset.
    std::optional<std::uint64_t> max_polls;
    /// Stop after this many consecutive polls without new entries.
    std::optional<std::uint64_t> idle_polls;
    const std::atomic<bool>* stop = nullptr;
};

struct FollowStats {
    std::uint64_t polls = 0;
    std::uint64_t entries = 0;
    std::uint64_t skipped = 0;
    std::uint64_t next_index = 0;
};

/// Follows one log: every poll fetches [cursor, tree_size) and hands the new
/// batches to the sink in index order. The cursor advances after each batch
/// has been consumed, so a restart resumes without repeats.
class LogFollower {
public:
    LogFollower(LogSource source, RetryPolicy policy, CursorStore* cursors, FollowOptions options);

    FollowStats run(const BatchSink& sink);

    void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) { sleeper_ = std::move(sleeper); }

private:
    LogSource source_;
    RetryPolicy policy_;
    CursorStore* cursors_;
    FollowOptions options_;
    std::function<void(std::chrono::milliseconds)> sleeper_;
};

}  // namespace ctphish::ctlog
