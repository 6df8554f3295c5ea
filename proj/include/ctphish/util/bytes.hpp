#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctphish {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;
using Sha256Digest = std::array<std::uint8_t, 32>;

inline ByteView as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::string to_hex(ByteView bytes);
Bytes from_hex(std::string_view hex);

std::string base64_encode(ByteView bytes);
/// Throws std::invalid_argument on characters outside the standard alphabet.
Bytes base64_decode(std::string_view text);

Sha256Digest sha256(ByteView bytes);

}  // namespace ctphish
