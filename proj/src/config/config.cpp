#include "ctphish/config/config.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <set>

#include "ctphish/data.hpp"
#include "ctphish/errors.hpp"

extern char** environ;

namespace ctphish::config {

namespace fs = std::filesystem;

namespace {

using ms = std::chrono::milliseconds;

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (auto& [k, _] : j.items()) {
        if (!allowed.contains(k)) throw ConfigError("unknown config key '" + (where.empty() ? k : where + "." + k) + "'");
    }
}

ms duration_of(const Json& j, const std::string& key) {
    try {
        if (j.is_number_unsigned()) return std::chrono::seconds(j.get<std::uint64_t>());
        return parse_duration(j.get<std::string>());
    } catch (const std::exception& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

template <class T>
T get_as(const Json& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const Json::exception&) {
        throw ConfigError(key + ": wrong type");
    }
}

std::string joined(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

const std::set<std::string> k_reserved_env{"CTPHISH_CONFIG", "CTPHISH_LOG_LEVEL"};
const std::set<std::string> k_structured_keys{"logs", "feeds", "feed_intervals", "target_fprs"};

bool is_structured(const std::string& k) { return k_structured_keys.contains(k); }

}  // namespace

ctlog::RetryPolicy Retry::policy() const {
    ctlog::RetryPolicy p;
    p.base = base;
    p.cap = cap;
    p.max_attempts = max_attempts;
    p.request_timeout = request_timeout;
    return p;
}

bool PipelineConfig::operator==(const PipelineConfig& o) const {
    auto same_logs = logs.size() == o.logs.size() &&
                     std::equal(logs.begin(), logs.end(), o.logs.begin(), [](const auto& a, const auto& b) {
                         return a.name == b.name && a.base_url == b.base_url && a.scope_year == b.scope_year;
                     });
    auto same_feeds = feeds.size() == o.feeds.size() &&
                      std::equal(feeds.begin(), feeds.end(), o.feeds.begin(), [](const auto& a, const auto& b) {
                          return a.name == b.name && a.source == b.source && a.url == b.url;
                      });
    return same_logs && same_feeds && feed_intervals == o.feed_intervals && filters == o.filters &&
           workers == o.workers && chunks == o.chunks && retry == o.retry && poll_interval == o.poll_interval &&
           model == o.model && threshold == o.threshold && target_fprs == o.target_fprs && paths == o.paths;
}

intel::FeedSchedule PipelineConfig::schedule() const {
    auto s = intel::FeedSchedule::defaults();
    for (const auto& [feed, interval] : feed_intervals) s.set(feed, interval);
    return s;
}

std::string PipelineConfig::intel_db() const {
    return paths.intel_db.empty() ? joined(paths.data_dir, "intel.sqlite") : paths.intel_db;
}
std::string PipelineConfig::results() const {
    return paths.results.empty() ? joined(paths.data_dir, "results.jsonl") : paths.results;
}
std::string PipelineConfig::cursors() const {
    return paths.cursors.empty() ? joined(paths.data_dir, "cursors.json") : paths.cursors;
}

void PipelineConfig::validate() const {
    std::set<std::string> names;
    for (const auto& l : logs) {
        if (l.name.empty()) throw ConfigError("log without a name");
        if (!names.insert(l.name).second) throw ConfigError("duplicate log '" + l.name + "'");
        if (l.base_url.rfind("http://", 0) != 0 && l.base_url.rfind("https://", 0) != 0) {
            throw ConfigError("log '" + l.name + "' needs an http(s) URL");
        }
    }
    names.clear();
    for (const auto& f : feeds) {
        if (f.name.empty() || f.url.empty()) throw ConfigError("feed entries need a name and a url");
        if (!names.insert(f.name).second) throw ConfigError("duplicate feed '" + f.name + "'");
    }
    schedule();
    if (workers.fetch == 0 || workers.classify == 0 || workers.hooks == 0 || workers.tls == 0) {
        throw ConfigError("worker counts must be positive");
    }
    if (chunks.chunk_size == 0 || chunks.page_size == 0) throw ConfigError("chunk_size and page_size must be positive");
    if (retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be at least 1");
    if (retry.base.count() <= 0 || retry.cap < retry.base) throw ConfigError("retry.base must be positive and <= retry.cap");
    if (retry.request_timeout.count() <= 0) throw ConfigError("retry.request_timeout must be positive");
    if (poll_interval.count() <= 0) throw ConfigError("poll_interval must be positive");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
    for (double t : target_fprs) {
        if (!(t > 0.0 && t < 1.0)) throw ConfigError("target_fprs must lie in (0, 1)");
    }
    for (const auto* input : {&filters.benign_services, &filters.popular_domains, &filters.malicious_domains, &paths.hooks}) {
        if (!input->empty() && !fs::exists(*input)) throw ConfigError("no such file: " + *input);
    }
    try {
        if (!paths.data_dir.empty()) fs::create_directories(paths.data_dir);
        for (const auto& out : {intel_db(), results(), cursors()}) {
            auto parent = fs::path(out).parent_path();
            if (!parent.empty()) fs::create_directories(parent);
        }
    } catch (const fs::filesystem_error& e) {
        throw ConfigError(std::string("cannot create data directories: ") + e.what());
    }
}

Json to_json(const PipelineConfig& c) {
    Json logs = Json::array();
    for (const auto& l : c.logs) {
        Json j = {{"name", l.name}, {"url", l.base_url}};
        if (l.scope_year) j["scope_year"] = *l.scope_year;
        logs.push_back(j);
    }
    Json feeds = Json::array();
    for (const auto& f : c.feeds) {
        feeds.push_back({{"name", f.name},
                         {"source", f.source ? Json(std::string(intel::to_string(*f.source))) : Json("prefixes")},
                         {"url", f.url}});
    }
    Json intervals = Json::object();
    for (const auto& [k, v] : c.feed_intervals) intervals[k] = format_duration(v);
    return {{"logs", logs},
            {"feeds", feeds},
            {"feed_intervals", intervals},
            {"filters",
             {{"benign_services", c.filters.benign_services},
              {"popular_domains", c.filters.popular_domains},
              {"malicious_domains", c.filters.malicious_domains}}},
            {"workers",
             {{"fetch", c.workers.fetch}, {"classify", c.workers.classify}, {"hooks", c.workers.hooks}, {"tls", c.workers.tls}}},
            {"chunks", {{"chunk_size", c.chunks.chunk_size}, {"gap", c.chunks.gap}, {"page_size", c.chunks.page_size}}},
            {"retry",
             {{"base", format_duration(c.retry.base)},
              {"cap", format_duration(c.retry.cap)},
              {"max_attempts", c.retry.max_attempts},
              {"request_timeout", format_duration(c.retry.request_timeout)}}},
            {"poll_interval", format_duration(c.poll_interval)},
            {"model", c.model},
            {"threshold", c.threshold},
            {"target_fprs", c.target_fprs},
            {"paths",
             {{"data_dir", c.paths.data_dir},
              {"intel_db", c.paths.intel_db},
              {"results", c.paths.results},
              {"cursors", c.paths.cursors},
              {"hooks", c.paths.hooks}}}};
}

PipelineConfig config_from_json(const Json& j) {
    reject_unknown(j,
                   {"logs", "feeds", "feed_intervals", "filters", "workers", "chunks", "retry", "poll_interval", "model",
                    "threshold", "target_fprs", "paths", "$schema", "comment"},
                   "");
    PipelineConfig c;
    if (j.contains("logs")) {
        if (!j["logs"].is_array()) throw ConfigError("logs must be an array");
        for (const auto& l : j["logs"]) {
            reject_unknown(l, {"name", "url", "scope_year"}, "logs[]");
            ctlog::LogSource s;
            s.name = get_as<std::string>(l.value("name", Json("")), "logs[].name");
            s.base_url = get_as<std::string>(l.value("url", Json("")), "logs[].url");
            if (l.contains("scope_year")) s.scope_year = get_as<int>(l["scope_year"], "logs[].scope_year");
            c.logs.push_back(s);
        }
    }
    if (j.contains("feeds")) {
        if (!j["feeds"].is_array()) throw ConfigError("feeds must be an array");
        for (const auto& f : j["feeds"]) {
            reject_unknown(f, {"name", "source", "url"}, "feeds[]");
            intel::FeedDefinition d;
            d.name = get_as<std::string>(f.value("name", Json("")), "feeds[].name");
            d.url = get_as<std::string>(f.value("url", Json("")), "feeds[].url");
            std::string src = get_as<std::string>(f.value("source", Json(d.name)), "feeds[].source");
            if (src != "prefixes") {
                try {
                    d.source = intel::feed_source_from_string(src);
                } catch (const std::exception& e) {
                    throw ConfigError("feeds[].source: " + std::string(e.what()));
                }
            }
            c.feeds.push_back(d);
        }
    }
    if (j.contains("feed_intervals")) {
        reject_unknown(j["feed_intervals"], {"phishtank", "phishstats", "openphish", "prefixes", "custom"}, "feed_intervals");
        for (auto& [k, v] : j["feed_intervals"].items()) c.feed_intervals[k] = duration_of(v, "feed_intervals." + k);
    }
    if (j.contains("filters")) {
        const auto& f = j["filters"];
        reject_unknown(f, {"benign_services", "popular_domains", "malicious_domains"}, "filters");
        c.filters.benign_services = get_as<std::string>(f.value("benign_services", Json("")), "filters.benign_services");
        c.filters.popular_domains = get_as<std::string>(f.value("popular_domains", Json("")), "filters.popular_domains");
        c.filters.malicious_domains = get_as<std::string>(f.value("malicious_domains", Json("")), "filters.malicious_domains");
    }
    if (j.contains("workers")) {
        const auto& w = j["workers"];
        reject_unknown(w, {"fetch", "classify", "hooks", "tls"}, "workers");
        if (w.contains("fetch")) c.workers.fetch = get_as<std::size_t>(w["fetch"], "workers.fetch");
        if (w.contains("classify")) c.workers.classify = get_as<std::size_t>(w["classify"], "workers.classify");
        if (w.contains("hooks")) c.workers.hooks = get_as<std::size_t>(w["hooks"], "workers.hooks");
        if (w.contains("tls")) c.workers.tls = get_as<std::size_t>(w["tls"], "workers.tls");
    }
    if (j.contains("chunks")) {
        const auto& ch = j["chunks"];
        reject_unknown(ch, {"chunk_size", "gap", "page_size"}, "chunks");
        if (ch.contains("chunk_size")) c.chunks.chunk_size = get_as<std::uint64_t>(ch["chunk_size"], "chunks.chunk_size");
        if (ch.contains("gap")) c.chunks.gap = get_as<std::uint64_t>(ch["gap"], "chunks.gap");
        if (ch.contains("page_size")) c.chunks.page_size = get_as<std::uint64_t>(ch["page_size"], "chunks.page_size");
    }
    if (j.contains("retry")) {
        const auto& r = j["retry"];
        reject_unknown(r, {"base", "cap", "max_attempts", "request_timeout"}, "retry");
        if (r.contains("base")) c.retry.base = duration_of(r["base"], "retry.base");
        if (r.contains("cap")) c.retry.cap = duration_of(r["cap"], "retry.cap");
        if (r.contains("max_attempts")) c.retry.max_attempts = get_as<int>(r["max_attempts"], "retry.max_attempts");
        if (r.contains("request_timeout")) c.retry.request_timeout = duration_of(r["request_timeout"], "retry.request_timeout");
    }
    if (j.contains("poll_interval")) c.poll_interval = duration_of(j["poll_interval"], "poll_interval");
    if (j.contains("model")) c.model = get_as<std::string>(j["model"], "model");
    if (j.contains("threshold")) c.threshold = get_as<double>(j["threshold"], "threshold");
    if (j.contains("target_fprs")) c.target_fprs = get_as<std::vector<double>>(j["target_fprs"], "target_fprs");
    if (j.contains("paths")) {
        const auto& p = j["paths"];
        reject_unknown(p, {"data_dir", "intel_db", "results", "cursors", "hooks"}, "paths");
        c.paths.data_dir = get_as<std::string>(p.value("data_dir", Json(c.paths.data_dir)), "paths.data_dir");
        c.paths.intel_db = get_as<std::string>(p.value("intel_db", Json("")), "paths.intel_db");
        c.paths.results = get_as<std::string>(p.value("results", Json("")), "paths.results");
        c.paths.cursors = get_as<std::string>(p.value("cursors", Json("")), "paths.cursors");
        c.paths.hooks = get_as<std::string>(p.value("hooks", Json("")), "paths.hooks");
    }
    return c;
}

std::vector<std::string> scalar_keys() {
    std::vector<std::string> keys;
    Json j = to_json(PipelineConfig{});
    for (auto& [k, v] : j.items()) {
        if (v.is_object() && !is_structured(k)) {
            for (auto& [sub, _] : v.items()) keys.push_back(k + "." + sub);
        } else {
            keys.push_back(k);
        }
    }
    return keys;
}

void apply_override(PipelineConfig& c, const std::string& key, const std::string& value) {
    Json j = to_json(c);
    auto dot = key.find('.');
    Json* slot = nullptr;
    if (dot == std::string::npos) {
        if (!j.contains(key) || (j[key].is_object() && !is_structured(key))) {
            throw ConfigError("unknown config key '" + key + "'");
        }
        slot = &j[key];
    } else {
        auto head = key.substr(0, dot), tail = key.substr(dot + 1);
        if (!j.contains(head) || !j[head].is_object() || is_structured(head) || !j[head].contains(tail)) {
            throw ConfigError("unknown config key '" + key + "'");
        }
        slot = &j[head][tail];
    }
    try {
        if (k_structured_keys.contains(key)) {
            if (key == "target_fprs" && !value.empty() && value.front() != '[') {
                Json list = Json::array();
                std::size_t pos = 0;
                while (pos <= value.size()) {
                    auto comma = value.find(',', pos);
                    list.push_back(std::stod(value.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
                    if (comma == std::string::npos) break;
                    pos = comma + 1;
                }
                *slot = list;
            } else {
                *slot = Json::parse(value);
            }
        } else if (slot->is_boolean()) {
            if (value != "true" && value != "false") throw std::invalid_argument("expected true or false");
            *slot = value == "true";
        } else if (slot->is_number_unsigned() || slot->is_number_integer()) {
            std::size_t used = 0;
            long long v = std::stoll(value, &used);
            if (used != value.size() || v < 0) throw std::invalid_argument("expected a non-negative integer");
            *slot = static_cast<std::uint64_t>(v);
        } else if (slot->is_number_float()) {
            std::size_t used = 0;
            double v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument("expected a number");
            *slot = v;
        } else {
            *slot = value;
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(key + "=" + value + ": " + e.what());
    }
    c = config_from_json(j);
}

std::optional<std::string> env_key(const std::string& name) {
    if (name.rfind("CTPHISH_", 0) != 0 || k_reserved_env.contains(name)) return std::nullopt;
    if (name == "CTPHISH_DATA_DIR") return "paths.data_dir";
    for (const auto& k : scalar_keys()) {
        std::string env = "CTPHISH_";
        for (char ch : k) env += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        if (env == name) return k;
    }
    throw ConfigError("unknown environment variable " + name);
}

PipelineConfig load_file(const std::string& path) {
    if (!fs::exists(path)) throw ConfigError("no such config file: " + path);
    Json j;
    try {
        j = Json::parse(data::read_file(path));
    } catch (const Json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    return config_from_json(j);
}

void save_file(const PipelineConfig& c, const std::string& path) { data::write_file_atomic(path, to_json(c).dump(2) + "\n"); }

PipelineConfig load(const LoadOptions& options) {
    PipelineConfig c = options.file ? load_file(*options.file) : PipelineConfig{};
    for (const auto& [name, value] : options.env) {
        if (auto key = env_key(name)) apply_override(c, *key, value);
    }
    for (const auto& [key, value] : options.overrides) apply_override(c, key, value);
    c.validate();
    return c;
}

std::map<std::string, std::string> process_env() {
    std::map<std::string, std::string> out;
    for (char** e = environ; e && *e; ++e) {
        std::string kv(*e);
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        if (kv.rfind("CTPHISH_", 0) == 0) out[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return out;
}

}  // namespace ctphish::config
