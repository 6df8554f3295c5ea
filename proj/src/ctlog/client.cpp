#include "ctphish/ctlog/client.hpp"

#include <httplib.h>

#include <cmath>
#include <thread>

#include "ctphish/errors.hpp"
#include "ctphish/util/json.hpp"

namespace ctphish::ctlog {

std::chrono::milliseconds RetryPolicy::delay(int retry) const {
    double ms = static_cast<double>(base.count()) * std::pow(factor, retry);
    ms = std::min(ms, static_cast<double>(cap.count()));
    return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
}

std::pair<std::string, std::string> split_base_url(const std::string& url) {
    auto scheme = url.find("://");
    if (scheme == std::string::npos) throw std::invalid_argument("log URL needs a scheme: " + url);
    auto slash = url.find('/', scheme + 3);
    std::string origin = slash == std::string::npos ? url : url.substr(0, slash);
    std::string path = slash == std::string::npos ? "" : url.substr(slash);
    while (!path.empty() && path.back() == '/') path.pop_back();
    return {origin, path};
}

LogClient::LogClient(LogSource source, RetryPolicy policy)
    : source_(std::move(source)), policy_(policy), sleeper_([](auto d) { std::this_thread::sleep_for(d); }) {
    auto [origin, path] = split_base_url(source_.base_url);
    path_prefix_ = path;
    http_ = std::make_unique<httplib::Client>(origin);
    http_->enable_server_certificate_verification(false);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(policy_.request_timeout);
    http_->set_connection_timeout(secs);
    http_->set_read_timeout(secs);
    http_->set_keep_alive(true);
}

LogClient::~LogClient() = default;

ClientCounters LogClient::counters() const {
    std::lock_guard lock(mu_);
    return counters_;
}

std::string LogClient::get_json_body(const std::string& path) {
    std::lock_guard lock(mu_);
    std::string last_error;
    for (int attempt = 0; attempt < policy_.max_attempts; ++attempt) {
        if (attempt > 0) {
            ++counters_.retries;
            sleeper_(policy_.delay(attempt - 1));
        }
        ++counters_.requests;
        auto res = http_->Get(path_prefix_ + path);
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        int status = res->status;
        if (status == 200) return res->body;
        if (status == 429 || status >= 500) {
            last_error = "HTTP " + std::to_string(status);
            continue;
        }
        if (status == 400 || status == 416) {
            throw RangeRejected(source_.name + ": " + path + " rejected: " + res->body);
        }
        throw MalformedResponse(source_.name + ": unexpected HTTP " + std::to_string(status));
    }
    throw LogUnreachable(source_.name + ": " + last_error + " after " + std::to_string(policy_.max_attempts) +
                         " attempts");
}

SignedTreeHead LogClient::get_sth() {
    auto body = get_json_body("/ct/v1/get-sth");
    try {
        auto j = Json::parse(body);
        SignedTreeHead sth;
        sth.tree_size = j.at("tree_size").get<std::uint64_t>();
        sth.timestamp = from_unix_ms(j.at("timestamp").get<std::int64_t>());
        sth.root_hash = j.value("sha256_root_hash", "");
        return sth;
    } catch (const Json::exception& e) {
        throw MalformedResponse(source_.name + ": get-sth: " + e.what());
    }
}

EntryBatch LogClient::get_entries(std::uint64_t start, std::uint64_t end) {
    if (start > end) throw RangeRejected("start > end");
    EntryBatch batch;
    batch.start = start;
    batch.end = end;
    std::uint64_t next = start;
    while (next < end) {
        // The wire protocol's end index is inclusive.
        auto body = get_json_body("/ct/v1/get-entries?start=" + std::to_string(next) +
                                  "&end=" + std::to_string(end - 1));
        Json items;
        try {
            items = Json::parse(body).at("entries");
        } catch (const Json::exception& e) {
            throw MalformedResponse(source_.name + ": get-entries: " + e.what());
        }
        if (!items.is_array() || items.empty()) throw MalformedResponse(source_.name + ": empty get-entries page");
        if (items.size() > end - next) throw MalformedResponse(source_.name + ": more entries than requested");
        for (const auto& item : items) {
            std::uint64_t index = next++;
            try {
                auto leaf = base64_decode(item.at("leaf_input").get<std::string>());
                auto extra = base64_decode(item.value("extra_data", ""));
                batch.entries.push_back(decode_entry(index, leaf, extra));
            } catch (const LeafDecodeError&) {
                batch.skipped.push_back(index);
            } catch (const std::invalid_argument&) {
                batch.skipped.push_back(index);
            } catch (const Json::exception&) {
                batch.skipped.push_back(index);
            }
        }
        if (next < end) {
            std::lock_guard lock(mu_);
            ++counters_.truncated_pages;
        }
    }
    return batch;
}

UtcTime LogClient::leaf_timestamp(std::uint64_t index) {
    auto batch = get_entries(index, index + 1);
    if (batch.entries.empty()) throw LeafDecodeError("undecodable leaf at " + std::to_string(index));
    return batch.entries.front().timestamp;
}

}  // namespace ctphish::ctlog
