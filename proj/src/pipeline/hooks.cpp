#include "ctphish/pipeline/hooks.hpp"

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <cstdio>
#include <set>

#include <spdlog/spdlog.h>

#include "ctphish/data.hpp"
#include "ctphish/errors.hpp"

extern char** environ;

namespace ctphish::pipeline {

std::string_view to_string(HookTrigger) { return "on_positive"; }

HookTrigger hook_trigger_from_string(std::string_view s) {
    if (s == "on_positive") return HookTrigger::on_positive;
    throw ConfigError("unknown hook trigger '" + std::string(s) + "'");
}

std::string_view to_string(HookStatus s) {
    switch (s) {
        case HookStatus::ok: return "ok";
        case HookStatus::failed: return "failed";
        case HookStatus::timed_out: return "timed_out";
        case HookStatus::spawn_error: return "spawn_error";
        case HookStatus::dropped: return "dropped";
    }
    return "?";
}

namespace {

std::string_view trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Value {
    enum { string, boolean, integer } type;
    std::string text;
    bool flag = false;
    long long number = 0;
};

// Parses a value and returns the unconsumed rest of the line.
Value parse_value(std::string_view v, std::string_view& rest, const std::string& where) {
    Value out{};
    if (!v.empty() && (v[0] == '"' || v[0] == '\'')) {
        char q = v[0];
        std::size_t i = 1;
        for (; i < v.size() && v[i] != q; ++i) {
            if (q == '"' && v[i] == '\\' && i + 1 < v.size()) {
                char c = v[++i];
                switch (c) {
                    case 'n': out.text += '\n'; break;
                    case 't': out.text += '\t'; break;
                    case '"': out.text += '"'; break;
                    case '\\': out.text += '\\'; break;
                    default: throw ConfigError(where + ": bad escape \\" + std::string(1, c));
                }
            } else {
                out.text += v[i];
            }
        }
        if (i >= v.size()) throw ConfigError(where + ": unterminated string");
        out.type = Value::string;
        rest = v.substr(i + 1);
        return out;
    }
    auto end = v.find_first_of(" \t#");
    auto word = v.substr(0, end);
    rest = end == std::string_view::npos ? std::string_view{} : v.substr(end);
    if (word == "true" || word == "false") {
        out.type = Value::boolean;
        out.flag = word == "true";
        return out;
    }
    try {
        std::size_t used = 0;
        out.number = std::stoll(std::string(word), &used);
        if (used != word.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
        throw ConfigError(where + ": cannot parse value '" + std::string(word) + "'");
    }
    out.type = Value::integer;
    return out;
}

std::string toml_string(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out + "\"";
}

}  // namespace

std::vector<HookSpec> parse_hooks(std::string_view text) {
    std::vector<HookSpec> hooks;
    std::set<std::string> names;
    std::vector<bool> has_command;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        const std::string where = "hooks line " + std::to_string(line_no);
        auto line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line[0] == '[') {
            auto close = line.find(']');
            if (close == std::string_view::npos) throw ConfigError(where + ": unterminated table header");
            auto after = trim(line.substr(close + 1));
            if (!after.empty() && after[0] != '#') throw ConfigError(where + ": text after table header");
            auto header = trim(line.substr(1, close - 1));
            if (header.substr(0, 5) != "hook." || header.size() == 5) {
                throw ConfigError(where + ": expected [hook.<name>]");
            }
            std::string name(header.substr(5));
            if (!names.insert(name).second) throw ConfigError(where + ": duplicate hook '" + name + "'");
            HookSpec h;
            h.name = name;
            hooks.push_back(std::move(h));
            has_command.push_back(false);
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
        if (hooks.empty()) throw ConfigError(where + ": key outside a [hook.<name>] table");
        std::string key(trim(line.substr(0, eq)));
        std::string_view rest;
        Value v = parse_value(trim(line.substr(eq + 1)), rest, where);
        rest = trim(rest);
        if (!rest.empty() && rest[0] != '#') throw ConfigError(where + ": trailing characters");
        auto& h = hooks.back();
        auto need = [&](decltype(Value::type) t) {
            if (v.type != t) throw ConfigError(where + ": wrong type for '" + key + "'");
        };
        if (key == "command") {
            need(Value::string);
            h.command = v.text;
            has_command.back() = true;
        } else if (key == "trigger") {
            need(Value::string);
            h.trigger = hook_trigger_from_string(v.text);
        } else if (key == "timeout") {
            if (v.type == Value::integer) {
                if (v.number <= 0) throw ConfigError(where + ": timeout must be positive");
                h.timeout = std::chrono::seconds(v.number);
            } else {
                need(Value::string);
                try {
                    h.timeout = parse_duration(v.text);
                } catch (const std::exception& e) {
                    throw ConfigError(where + ": " + e.what());
                }
            }
        } else if (key == "enabled") {
            need(Value::boolean);
            h.enabled = v.flag;
        } else {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }
    for (std::size_t i = 0; i < hooks.size(); ++i) {
        if (!has_command[i] || hooks[i].command.empty()) {
            throw ConfigError("hook '" + hooks[i].name + "' has no command");
        }
    }
    return hooks;
}

std::vector<HookSpec> load_hooks(const std::string& path) { return parse_hooks(data::read_file(path)); }

std::string dump_hooks(const std::vector<HookSpec>& hooks) {
    std::string out;
    for (const auto& h : hooks) {
        if (!out.empty()) out += "\n";
        out += "[hook." + h.name + "]\n";
        out += "command = " + toml_string(h.command) + "\n";
        out += "trigger = " + toml_string(to_string(h.trigger)) + "\n";
        out += "timeout = " + toml_string(format_duration(h.timeout)) + "\n";
        out += std::string("enabled = ") + (h.enabled ? "true" : "false") + "\n";
    }
    return out;
}

Json to_json(const HookSpec& h) {
    return {{"name", h.name},
            {"trigger", to_string(h.trigger)},
            {"command", h.command},
            {"timeout", format_duration(h.timeout)},
            {"enabled", h.enabled}};
}

HookSpec hook_from_json(const Json& j) {
    static const std::set<std::string> keys{"name", "trigger", "command", "timeout", "enabled"};
    for (auto& [k, _] : j.items()) {
        if (!keys.contains(k)) throw ConfigError("unknown hook key '" + k + "'");
    }
    HookSpec h;
    h.name = j.at("name").get<std::string>();
    h.command = j.at("command").get<std::string>();
    if (j.contains("trigger")) h.trigger = hook_trigger_from_string(j["trigger"].get<std::string>());
    if (j.contains("timeout")) h.timeout = parse_duration(j["timeout"].get<std::string>());
    h.enabled = j.value("enabled", true);
    return h;
}

std::string shell_quote(std::string_view s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

std::string expand_command(const std::string& tmpl, const ClassificationResult& r) {
    auto value_of = [&](std::string_view name) -> std::optional<std::string> {
        if (name == "fingerprint") return shell_quote(to_hex(r.fingerprint));
        if (name == "domain") return shell_quote(r.domains.empty() ? "" : r.domains.front());
        if (name == "domains") {
            std::string all;
            for (const auto& d : r.domains) all += (all.empty() ? "" : " ") + shell_quote(d);
            return all.empty() ? shell_quote("") : all;
        }
        if (name == "score" || name == "threshold") {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6f", name == "score" ? r.score : r.threshold);
            return std::string(buf);
        }
        if (name == "classifier") return shell_quote(r.classifier);
        return std::nullopt;
    };
    std::string out;
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        if (tmpl[i] == '{') {
            auto close = tmpl.find('}', i);
            if (close != std::string::npos) {
                if (auto v = value_of(std::string_view(tmpl).substr(i + 1, close - i - 1))) {
                    out += *v;
                    i = close;
                    continue;
                }
            }
        }
        out += tmpl[i];
    }
    return out;
}

bool hook_matches(const HookSpec& h, const ClassificationResult& r) {
    return h.enabled && h.trigger == HookTrigger::on_positive && r.predicted == dataset::Label::phish;
}

CommandOutcome run_command(const std::string& command, std::chrono::milliseconds timeout) {
    using clock = std::chrono::steady_clock;
    CommandOutcome out;
    posix_spawn_file_actions_t actions;
    posix_spawnattr_t attr;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, 0, "/dev/null", O_RDONLY, 0);
    posix_spawn_file_actions_addopen(&actions, 1, "/dev/null", O_WRONLY, 0);
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attr, 0);

    std::string sh = "/bin/sh", dash_c = "-c", cmd = command;
    char* argv[] = {sh.data(), dash_c.data(), cmd.data(), nullptr};
    pid_t pid = 0;
    auto start = clock::now();
    int rc = posix_spawn(&pid, "/bin/sh", &actions, &attr, argv, environ);
    posix_spawn_file_actions_destroy(&actions);
    posix_spawnattr_destroy(&attr);
    if (rc != 0) {
        out.status = HookStatus::spawn_error;
        out.exit_code = rc;
        return out;
    }

    int status = 0;
    auto deadline = start + timeout;
    while (true) {
        pid_t r = ::waitpid(pid, &status, WNOHANG);
        if (r == pid) break;
        if (r < 0) {
            out.status = HookStatus::spawn_error;
            out.exit_code = errno;
            return out;
        }
        if (clock::now() >= deadline) {
            ::kill(-pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            out.status = HookStatus::timed_out;
            out.exit_code = -1;
            out.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - start);
            return out;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    out.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - start);
    if (WIFEXITED(status)) {
        out.exit_code = WEXITSTATUS(status);
        out.status = out.exit_code == 0 ? HookStatus::ok : HookStatus::failed;
    } else {
        out.exit_code = WIFSIGNALED(status) ? 128 + WTERMSIG(status) : -1;
        out.status = HookStatus::failed;
    }
    return out;
}

HookDispatcher::HookDispatcher(std::vector<HookSpec> hooks, std::size_t workers, std::size_t max_pending)
    : hooks_(std::move(hooks)), max_pending_(max_pending ? max_pending : 1) {
    for (std::size_t i = 0; i < std::max<std::size_t>(1, workers); ++i) threads_.emplace_back([this] { worker(); });
}

HookDispatcher::~HookDispatcher() {
    {
        std::lock_guard lock(mu_);
        stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
}

std::size_t HookDispatcher::dispatch(const ClassificationResult& r) {
    std::size_t queued = 0;
    std::lock_guard lock(mu_);
    for (const auto& h : hooks_) {
        if (!hook_matches(h, r)) continue;
        if (jobs_.size() >= max_pending_) {
            outcomes_.push_back({h.name, r.fingerprint, HookStatus::dropped, -1, {}});
            spdlog::warn("hook {} dropped: {} jobs pending", h.name, jobs_.size());
            continue;
        }
        jobs_.push_back({&h, expand_command(h.command, r), r.fingerprint});
        ++queued;
    }
    if (queued) cv_.notify_all();
    return queued;
}

void HookDispatcher::drain() {
    std::unique_lock lock(mu_);
    idle_cv_.wait(lock, [&] { return jobs_.empty() && running_ == 0; });
}

std::vector<HookOutcome> HookDispatcher::outcomes() const {
    std::lock_guard lock(mu_);
    return outcomes_;
}

void HookDispatcher::worker() {
    while (true) {
        Job job;
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [&] { return stop_ || !jobs_.empty(); });
            if (jobs_.empty()) return;
            job = std::move(jobs_.front());
            jobs_.pop_front();
            ++running_;
        }
        auto res = run_command(job.command, job.hook->timeout);
        if (res.status == HookStatus::timed_out) {
            spdlog::warn("hook {} timed out after {}", job.hook->name, format_duration(job.hook->timeout));
        } else if (res.status != HookStatus::ok) {
            spdlog::warn("hook {} ended with {} ({})", job.hook->name, to_string(res.status), res.exit_code);
        }
        std::lock_guard lock(mu_);
        outcomes_.push_back({job.hook->name, job.fingerprint, res.status, res.exit_code, res.elapsed});
        --running_;
        if (jobs_.empty() && running_ == 0) idle_cv_.notify_all();
    }
}

}  // namespace ctphish::pipeline
