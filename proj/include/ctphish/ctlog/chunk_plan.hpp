#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ctphish/util/time.hpp"

namespace ctphish::ctlog {

class LogClient;

/// Half-open time interval [from, to).
struct TimeSpan {
    UtcTime from{};
    UtcTime to{};
};

struct ChunkPlan {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> chunks;  ///< half-open index ranges
    std::uint64_t chunk_size = 0;
    std::uint64_t gap = 0;
    TimeSpan span;

    std::uint64_t entry_count() const;
};

/// Tiles [first, last) with chunks of `chunk_size` whose starts are
/// `chunk_size + gap` apart; the last chunk is clamped to `last`.
ChunkPlan plan_chunks(std::uint64_t first, std::uint64_t last, std::uint64_t chunk_size, std::uint64_t gap,
                      TimeSpan span = {});

/// Index range [first, last) whose leaf timestamps fall in `span`, found by
/// binary search over leaf timestamps. Throws EmptySpan.
std::pair<std::uint64_t, std::uint64_t> locate_span(LogClient& client, std::uint64_t tree_size, TimeSpan span);

ChunkPlan plan_chunks(LogClient& client, std::uint64_t chunk_size, std::uint64_t gap, TimeSpan span);

}  // namespace ctphish::ctlog
