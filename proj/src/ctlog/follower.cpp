#include "ctphish/ctlog/follower.hpp"

#include <filesystem>
#include <thread>

#include "ctphish/data.hpp"
#include "ctphish/errors.hpp"
#include "ctphish/util/json.hpp"

namespace ctphish::ctlog {

CursorStore::CursorStore(std::string path) : path_(std::move(path)) {
    if (path_.empty() || !std::filesystem::exists(path_)) return;
    try {
        auto j = Json::parse(data::read_file(path_));
        for (auto& [log, next] : j.at("cursors").items()) cursors_[log] = next.get<std::uint64_t>();
    } catch (const Json::exception& e) {
        throw ConfigError("cursor file " + path_ + ": " + e.what());
    }
}

std::optional<std::uint64_t> CursorStore::get(const std::string& log) const {
    std::lock_guard lock(mu_);
    auto it = cursors_.find(log);
    if (it == cursors_.end()) return std::nullopt;
    return it->second;
}

void CursorStore::set(const std::string& log, std::uint64_t next_index) {
    std::lock_guard lock(mu_);
    cursors_[log] = next_index;
    if (path_.empty()) return;
    Json j = {{"version", 1}, {"cursors", cursors_}};
    data::write_file_atomic(path_, j.dump(2) + "\n");
}

LogFollower::LogFollower(LogSource source, RetryPolicy policy, CursorStore* cursors, FollowOptions options)
    : source_(std::move(source)),
      policy_(policy),
      cursors_(cursors),
      options_(std::move(options)),
      sleeper_([](auto d) { std::this_thread::sleep_for(d); }) {}

FollowStats LogFollower::run(const BatchSink& sink) {
    LogClient head(source_, policy_);
    FollowStats stats;
    std::optional<std::uint64_t> cursor = cursors_ ? cursors_->get(source_.name) : std::nullopt;
    if (!cursor) cursor = options_.start_index;
    std::uint64_t idle = 0;

    auto stopping = [&] { return options_.stop && options_.stop->load(); };
    while (!stopping()) {
        auto sth = head.get_sth();
        ++stats.polls;
        if (!cursor) cursor = sth.tree_size;
        if (sth.tree_size > *cursor) {
            idle = 0;
            fetch_ranges(source_, policy_, {{*cursor, sth.tree_size}}, options_.fetch, [&](EntryBatch&& batch) {
                std::uint64_t end = batch.end;
                stats.entries += batch.entries.size();
                stats.skipped += batch.skipped.size();
                sink(std::move(batch));
                cursor = end;
                if (cursors_) cursors_->set(source_.name, end);
            });
        } else {
            ++idle;
        }
        stats.next_index = *cursor;
        if (options_.max_polls && stats.polls >= *options_.max_polls) break;
        if (options_.idle_polls && idle >= *options_.idle_polls) break;
        if (stopping()) break;
        sleeper_(options_.poll_interval);
    }
    return stats;
}

}  // namespace ctphish::ctlog
