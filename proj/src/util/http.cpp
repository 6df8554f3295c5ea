#include "ctphish/util/http.hpp"

#include <httplib.h>

#include "ctphish/ctlog/client.hpp"
#include "ctphish/data.hpp"
#include "ctphish/errors.hpp"

namespace ctphish {

std::string fetch_url(const std::string& url, std::chrono::milliseconds timeout) {
    if (url.starts_with("file://")) return data::read_file(url.substr(7));
    if (url.find("://") == std::string::npos) return data::read_file(url);
    auto [origin, path] = ctlog::split_base_url(url);
    httplib::Client client(origin);
    client.enable_server_certificate_verification(false);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    client.set_follow_location(true);
    auto res = client.Get(path.empty() ? "/" : path);
    if (!res) throw Error("GET " + url + ": " + httplib::to_string(res.error()));
    if (res->status != 200) throw Error("GET " + url + ": HTTP " + std::to_string(res->status));
    return res->body;
}

}  // namespace ctphish
