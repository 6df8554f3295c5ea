#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "ctphish/ctlog/client.hpp"

namespace ctphish::ctlog {

struct FetchOptions {
    std::size_t workers = 1;
    std::uint64_t page_size = 256;  ///< entries per request unit handed to a worker
    std::size_t window = 0;         ///< max pages fetched ahead of emission; 0 = 2 * workers
};

struct FetchStats {
    std::uint64_t entries = 0;
    std::uint64_t skipped = 0;
    std::uint64_t requests = 0;
    std::uint64_t retries = 0;
};

using BatchSink = std::function<void(EntryBatch&&)>;

/// Downloads the given ranges with a pool of workers (one LogClient each)
/// and hands batches to `sink` on the calling thread in ascending index
/// order. A slow sink stalls the workers once `window` pages are buffered.
FetchStats fetch_ranges(const LogSource& source, const RetryPolicy& policy,
                        const std::vector<std::pair<std::uint64_t, std::uint64_t>>& ranges,
                        const FetchOptions& options, const BatchSink& sink);

}  // namespace ctphish::ctlog
