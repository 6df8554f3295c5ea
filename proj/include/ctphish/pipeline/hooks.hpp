#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "ctphish/pipeline/result.hpp"

namespace ctphish::pipeline {

enum class HookTrigger { on_positive };

std::string_view to_string(HookTrigger t);
HookTrigger hook_trigger_from_string(std::string_view s);

/// Post-processing command run for matching results. The command is passed
/// to /bin/sh -c after placeholder expansion:
///   {fingerprint} {domains} (space separated) {domain} (first) {score}
///   {threshold} {classifier}
/// Every substituted value is single-quoted for the shell.
struct HookSpec {
    std::string name;
    HookTrigger trigger = HookTrigger::on_positive;
    std::string command;
    std::chrono::milliseconds timeout{10'000};
    bool enabled = true;

    bool operator==(const HookSpec&) const = default;
};

/// Hook file: one `[hook.<name>]` table per hook with `command`, `trigger`,
/// `timeout` (duration string) and `enabled` keys. Values are TOML-style
/// strings, booleans or integers (seconds); '#' starts a comment. Throws
/// ConfigError on unknown keys or malformed lines.
std::vector<HookSpec> parse_hooks(std::string_view text);
std::vector<HookSpec> load_hooks(const std::string& path);
std::string dump_hooks(const std::vector<HookSpec>& hooks);

Json to_json(const HookSpec& h);
HookSpec hook_from_json(const Json& j);

std::string shell_quote(std::string_view s);
std::string expand_command(const std::string& tmpl, const ClassificationResult& r);

bool hook_matches(const HookSpec& h, const ClassificationResult& r);

enum class HookStatus { ok, failed, timed_out, spawn_error, dropped };
std::string_view to_string(HookStatus s);

struct HookOutcome {
    std::string hook;
    Sha256Digest fingerprint{};
    HookStatus status = HookStatus::ok;
    int exit_code = 0;
    std::chrono::milliseconds elapsed{0};
};

struct CommandOutcome {
    HookStatus status = HookStatus::ok;
    int exit_code = 0;
    std::chrono::milliseconds elapsed{0};
};

/// Runs `/bin/sh -c command` with stdin/stdout bound to /dev/null and kills
/// the process group once `timeout` passes.
CommandOutcome run_command(const std::string& command, std::chrono::milliseconds timeout);

/// Runs hooks on background threads. dispatch() never waits for a hook:
/// when `max_pending` jobs are queued the new job is recorded as dropped.
class HookDispatcher {
public:
    explicit HookDispatcher(std::vector<HookSpec> hooks, std::size_t workers = 1, std::size_t max_pending = 4096);
    ~HookDispatcher();
    HookDispatcher(const HookDispatcher&) = delete;
    HookDispatcher& operator=(const HookDispatcher&) = delete;

    /// Queues every enabled hook whose trigger matches; returns the count.
    std::size_t dispatch(const ClassificationResult& r);
    /// Blocks until every queued job has finished.
    void drain();

    std::vector<HookOutcome> outcomes() const;
    const std::vector<HookSpec>& hooks() const { return hooks_; }

private:
    struct Job {
        const HookSpec* hook;
        std::string command;
        Sha256Digest fingerprint;
    };
    void worker();

    std::vector<HookSpec> hooks_;
    std::size_t max_pending_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable idle_cv_;
    std::deque<Job> jobs_;
    std::size_t running_ = 0;
    bool stop_ = false;
    std::vector<HookOutcome> outcomes_;
    std::vector<std::thread> threads_;
};

}  // namespace ctphish::pipeline
