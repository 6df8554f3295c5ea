#pragma once

// Vendored nlohmann/json 3.11 (vendor/json.hpp).
#include <json.hpp>

namespace ctphish {
using Json = nlohmann::json;
}
