#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ctphish/util/bytes.hpp"
#include "ctphish/util/time.hpp"

namespace ctphish::ctlog {

struct FixtureCert {
    Bytes der;
    bool precert = false;
};

struct FixtureLog {
    std::string name;
    std::vector<FixtureCert> certs;
    std::uint64_t initial_size = 0;  ///< entries visible at start; 0 = all
    std::uint64_t growth_entries = 0;
    std::chrono::milliseconds growth_every{0};
    std::uint64_t page_size = 256;
    UtcTime start_time = from_unix_ms(1588291200000);  // 2020-05-01
    std::chrono::milliseconds step{1000};              ///< leaf timestamp increment
    int fail_status = 429;
    int fail_count = 0;  ///< first N requests answer with fail_status
};

/// Parses a fixture spec file (JSON). Certificate paths are relative to the
/// spec file. Throws SpecInvalid.
std::vector<FixtureLog> load_fixture_spec(const std::string& path);

/// Serves RFC 6962 get-sth / get-entries for a set of logs at
/// http://host:port/<log name>/ct/v1/...
class FixtureServer {
public:
    explicit FixtureServer(std::vector<FixtureLog> logs);
    ~FixtureServer();
    FixtureServer(const FixtureServer&) = delete;
    FixtureServer& operator=(const FixtureServer&) = delete;

    /// Binds (port 0 = ephemeral) and serves on a background thread.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Serves on the calling thread until stop().
    void listen(const std::string& host, int port);
    void stop();

    int port() const;
    std::string base_url(const std::string& log) const;

    std::uint64_t tree_size(const std::string& log) const;
    void grow(const std::string& log, std::uint64_t entries);
    void set_clock(std::function<UtcTime()> clock);

    /// "path?query" of every request received, in arrival order.
    std::vector<std::string> request_log() const;
    void clear_request_log();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace ctphish::ctlog
