#include "ctphish/ctlog/fixture_server.hpp"

#include <httplib.h>

#include <filesystem>
#include <mutex>
#include <thread>

#include "ctphish/cert/certificate.hpp"
#include "ctphish/ctlog/leaf.hpp"
#include "ctphish/data.hpp"
#include "ctphish/errors.hpp"
#include "ctphish/fixtures/cert_factory.hpp"
#include "ctphish/util/json.hpp"

namespace ctphish::ctlog {

namespace {

std::vector<Bytes> load_cert_file(const std::filesystem::path& path) {
    std::string raw = data::read_file(path.string());
    if (raw.find("-----BEGIN CERTIFICATE-----") != std::string::npos) return cert::pem_bundle_to_der(raw);
    return {Bytes(raw.begin(), raw.end())};
}

const std::vector<std::string> k_log_keys = {"name",         "certificates", "precert_every", "initial_size",
                                             "growth",       "page_size",    "start_time",    "step_ms",
                                             "fail_first"};

}  // namespace

std::vector<FixtureLog> load_fixture_spec(const std::string& path) {
    Json spec;
    try {
        spec = Json::parse(data::read_file(path));
    } catch (const std::exception& e) {
        throw SpecInvalid(path + ": " + e.what());
    }
    auto dir = std::filesystem::path(path).parent_path();
    std::vector<FixtureLog> logs;
    try {
        if (!spec.contains("logs") || !spec["logs"].is_array() || spec["logs"].empty()) {
            throw SpecInvalid("spec needs a non-empty \"logs\" array");
        }
        for (const auto& j : spec["logs"]) {
            for (auto& [key, _] : j.items()) {
                if (std::find(k_log_keys.begin(), k_log_keys.end(), key) == k_log_keys.end()) {
                    throw SpecInvalid("unknown key \"" + key + "\"");
                }
            }
            FixtureLog log;
            log.name = j.at("name").get<std::string>();
            if (log.name.empty() || log.name.find('/') != std::string::npos) throw SpecInvalid("bad log name");
            int precert_every = j.value("precert_every", 0);
            for (const auto& file : j.at("certificates")) {
                auto p = std::filesystem::path(file.get<std::string>());
                if (p.is_relative()) p = dir / p;
                for (auto& der : load_cert_file(p)) {
                    bool pre = precert_every > 0 && (log.certs.size() + 1) % precert_every == 0;
                    log.certs.push_back({std::move(der), pre});
                }
            }
            if (log.certs.empty()) throw SpecInvalid("log " + log.name + " has no certificates");
            log.initial_size = j.value("initial_size", std::uint64_t{0});
            if (j.contains("growth")) {
                log.growth_entries = j["growth"].at("entries").get<std::uint64_t>();
                log.growth_every = parse_duration(j["growth"].at("every").get<std::string>());
                if (log.growth_every.count() <= 0) throw SpecInvalid("growth interval must be positive");
            }
            log.page_size = j.value("page_size", std::uint64_t{256});
            if (log.page_size == 0) throw SpecInvalid("page_size must be >= 1");
            if (j.contains("start_time")) log.start_time = parse_rfc3339(j["start_time"].get<std::string>());
            log.step = std::chrono::milliseconds(j.value("step_ms", std::int64_t{1000}));
            if (j.contains("fail_first")) {
                log.fail_count = j["fail_first"].at("count").get<int>();
                log.fail_status = j["fail_first"].value("status", 429);
            }
            logs.push_back(std::move(log));
        }
    } catch (const SpecInvalid&) {
        throw;
    } catch (const std::exception& e) {
        throw SpecInvalid(path + ": " + e.what());
    }
    return logs;
}

struct FixtureServer::Impl {
    struct Log {
        FixtureLog spec;
        std::vector<std::string> entry_json;  // pre-rendered {"leaf_input":..,"extra_data":..}
        std::uint64_t grown = 0;
        int failures_left = 0;
    };

    std::vector<Log> logs;
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::string host = "127.0.0.1";
    mutable std::mutex mu;
    std::vector<std::string> requests;
    std::function<UtcTime()> clock = utc_now;
    UtcTime started = utc_now();

    Log* find(const std::string& name) {
        for (auto& l : logs) {
            if (l.spec.name == name) return &l;
        }
        return nullptr;
    }

    std::uint64_t size_of(const Log& l) const {
        const std::uint64_t total = l.spec.certs.size();
        std::uint64_t n = l.spec.initial_size ? std::min(l.spec.initial_size, total) : total;
        if (l.spec.growth_entries && l.spec.growth_every.count() > 0) {
            auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(clock() - started);
            if (elapsed.count() > 0) n += static_cast<std::uint64_t>(elapsed / l.spec.growth_every) * l.spec.growth_entries;
        }
        return std::min(total, n + l.grown);
    }
};

FixtureServer::FixtureServer(std::vector<FixtureLog> logs) : impl_(std::make_unique<Impl>()) {
    Sha256Digest issuer_hash = sha256(as_bytes("ctphish fixture issuer"));
    for (auto& spec : logs) {
        Impl::Log log;
        log.failures_left = spec.fail_count;
        log.entry_json.reserve(spec.certs.size());
        for (std::size_t i = 0; i < spec.certs.size(); ++i) {
            const auto& c = spec.certs[i];
            MerkleTreeLeaf leaf;
            leaf.timestamp_ms = static_cast<std::uint64_t>(to_unix_ms(spec.start_time) +
                                                           static_cast<std::int64_t>(i) * spec.step.count());
            Bytes extra;
            if (c.precert) {
                leaf.type = EntryType::precert_entry;
                leaf.issuer_key_hash = issuer_hash;
                leaf.certificate = fixtures::CertFactory::tbs_of(c.der);
                extra = encode_precert_extra_data(c.der, {});
            } else {
                leaf.certificate = c.der;
                extra = encode_x509_extra_data({});
            }
            log.entry_json.push_back("{\"leaf_input\":\"" + base64_encode(encode_leaf(leaf)) +
                                     "\",\"extra_data\":\"" + base64_encode(extra) + "\"}");
        }
        log.spec = std::move(spec);
        impl_->logs.push_back(std::move(log));
    }

    auto& srv = impl_->server;
    auto* impl = impl_.get();
    srv.Get(R"(/([^/]+)/ct/v1/get-sth)", [impl](const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lock(impl->mu);
        impl->requests.push_back(req.path);
        auto* log = impl->find(req.matches[1]);
        if (!log) {
            res.status = 404;
            return;
        }
        if (log->failures_left > 0) {
            --log->failures_left;
            res.status = log->spec.fail_status;
            return;
        }
        auto size = impl->size_of(*log);
        auto root = sha256(as_bytes(log->spec.name + "/" + std::to_string(size)));
        Json j = {{"tree_size", size},
                  {"timestamp", to_unix_ms(impl->clock())},
                  {"sha256_root_hash", base64_encode(root)},
                  {"tree_head_signature", ""}};
        res.set_content(j.dump(), "application/json");
    });
    srv.Get(R"(/([^/]+)/ct/v1/get-entries)", [impl](const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lock(impl->mu);
        std::string line = req.path;
        if (!req.params.empty()) {
            line += "?start=" + req.get_param_value("start") + "&end=" + req.get_param_value("end");
        }
        impl->requests.push_back(line);
        auto* log = impl->find(req.matches[1]);
        if (!log) {
            res.status = 404;
            return;
        }
        if (log->failures_left > 0) {
            --log->failures_left;
            res.status = log->spec.fail_status;
            return;
        }
        std::uint64_t start = 0, end = 0;
        try {
            start = std::stoull(req.get_param_value("start"));
            end = std::stoull(req.get_param_value("end"));
        } catch (const std::exception&) {
            res.status = 400;
            res.set_content("bad start/end", "text/plain");
            return;
        }
        auto size = impl->size_of(*log);
        if (start > end || start >= size) {
            res.status = 400;
            res.set_content("range outside tree", "text/plain");
            return;
        }
        end = std::min({end, size - 1, start + log->spec.page_size - 1});
        std::string body = "{\"entries\":[";
        for (std::uint64_t i = start; i <= end; ++i) {
            if (i != start) body += ",";
            body += log->entry_json[i];
        }
        body += "]}";
        res.set_content(body, "application/json");
    });
}

FixtureServer::~FixtureServer() { stop(); }

int FixtureServer::start(const std::string& host, int port) {
    impl_->host = host;
    impl_->port = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (impl_->port <= 0) throw Error("fixture server cannot bind " + host + ":" + std::to_string(port));
    impl_->started = impl_->clock();
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return impl_->port;
}

void FixtureServer::listen(const std::string& host, int port) {
    impl_->host = host;
    impl_->port = port;
    impl_->started = impl_->clock();
    if (!impl_->server.listen(host, port)) throw Error("fixture server cannot listen on " + host);
}

void FixtureServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

int FixtureServer::port() const { return impl_->port; }

std::string FixtureServer::base_url(const std::string& log) const {
    return "http://" + impl_->host + ":" + std::to_string(impl_->port) + "/" + log;
}

std::uint64_t FixtureServer::tree_size(const std::string& log) const {
    std::lock_guard lock(impl_->mu);
    auto* l = impl_->find(log);
    return l ? impl_->size_of(*l) : 0;
}

void FixtureServer::grow(const std::string& log, std::uint64_t entries) {
    std::lock_guard lock(impl_->mu);
    if (auto* l = impl_->find(log)) l->grown += entries;
}

void FixtureServer::set_clock(std::function<UtcTime()> clock) {
    std::lock_guard lock(impl_->mu);
    impl_->clock = std::move(clock);
    impl_->started = impl_->clock();
}

std::vector<std::string> FixtureServer::request_log() const {
    std::lock_guard lock(impl_->mu);
    return impl_->requests;
}

void FixtureServer::clear_request_log() {
    std::lock_guard lock(impl_->mu);
    impl_->requests.clear();
}

}  // namespace ctphish::ctlog
