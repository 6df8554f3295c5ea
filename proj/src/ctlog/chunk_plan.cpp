#include "ctphish/ctlog/chunk_plan.hpp"

#include "ctphish/ctlog/client.hpp"
#include "ctphish/errors.hpp"

namespace ctphish::ctlog {

std::uint64_t ChunkPlan::entry_count() const {
    std::uint64_t n = 0;
    for (const auto& [s, e] : chunks) n += e - s;
    return n;
}

ChunkPlan plan_chunks(std::uint64_t first, std::uint64_t last, std::uint64_t chunk_size, std::uint64_t gap,
                      TimeSpan span) {
    if (chunk_size == 0) throw std::invalid_argument("chunk_size must be >= 1");
    ChunkPlan plan;
    plan.chunk_size = chunk_size;
    plan.gap = gap;
    plan.span = span;
    for (std::uint64_t s = first; s < last; s += chunk_size + gap) {
        plan.chunks.emplace_back(s, std::min(last, s + chunk_size));
        if (last - s <= chunk_size + gap) break;
    }
    return plan;
}

namespace {

// First index in [0, n) whose leaf timestamp is >= t.
std::uint64_t lower_bound_ts(LogClient& client, std::uint64_t n, UtcTime t) {
    std::uint64_t lo = 0, hi = n;
    while (lo < hi) {
        std::uint64_t mid = lo + (hi - lo) / 2;
        if (client.leaf_timestamp(mid) < t) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    return lo;
}

}  // namespace

std::pair<std::uint64_t, std::uint64_t> locate_span(LogClient& client, std::uint64_t tree_size, TimeSpan span) {
    if (tree_size == 0 || span.to <= span.from) throw EmptySpan("no entries in span");
    std::uint64_t first = lower_bound_ts(client, tree_size, span.from);
    if (first == tree_size) throw EmptySpan("span starts after the last entry");
    std::uint64_t last = lower_bound_ts(client, tree_size, span.to);
    if (last <= first) throw EmptySpan("no entries in span");
    return {first, last};
}

ChunkPlan plan_chunks(LogClient& client, std::uint64_t chunk_size, std::uint64_t gap, TimeSpan span) {
    auto sth = client.get_sth();
    auto [first, last] = locate_span(client, sth.tree_size, span);
    return plan_chunks(first, last, chunk_size, gap, span);
}

}  // namespace ctphish::ctlog
