#pragma once

#include <chrono>
#include <string>

namespace ctphish {

/// GET over http(s), or read for file:// URLs and plain paths. Throws
/// ctphish::Error on transport failure or a non-200 status.
std::string fetch_url(const std::string& url, std::chrono::milliseconds timeout = std::chrono::seconds(30));

}  // namespace ctphish
