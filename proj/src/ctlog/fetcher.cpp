#include "ctphish/ctlog/fetcher.hpp"

#include <condition_variable>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

namespace ctphish::ctlog {

FetchStats fetch_ranges(const LogSource& source, const RetryPolicy& policy,
                        const std::vector<std::pair<std::uint64_t, std::uint64_t>>& ranges,
                        const FetchOptions& options, const BatchSink& sink) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> pages;
    const std::uint64_t page = std::max<std::uint64_t>(1, options.page_size);
    for (auto [s, e] : ranges) {
        for (std::uint64_t p = s; p < e; p += page) pages.emplace_back(p, std::min(e, p + page));
    }

    FetchStats stats;
    if (pages.empty()) return stats;
    const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, pages.size()));
    const std::size_t window = options.window ? options.window : 2 * workers;

    std::mutex mu;
    std::condition_variable cv;
    std::map<std::size_t, EntryBatch> ready;
    std::size_t next_page = 0;  // next page to hand to a worker
    std::size_t next_emit = 0;  // next page to pass to the sink
    bool abort = false;
    std::exception_ptr error;

    auto worker = [&] {
        LogClient client(source, policy);
        while (true) {
            std::size_t mine;
            {
                std::unique_lock lock(mu);
                cv.wait(lock, [&] { return abort || next_page >= pages.size() || next_page < next_emit + window; });
                if (abort || next_page >= pages.size()) break;
                mine = next_page++;
            }
            try {
                auto batch = client.get_entries(pages[mine].first, pages[mine].second);
                std::lock_guard lock(mu);
                ready.emplace(mine, std::move(batch));
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
                abort = true;
            }
            cv.notify_all();
        }
        auto c = client.counters();
        std::lock_guard lock(mu);
        stats.requests += c.requests;
        stats.retries += c.retries;
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);

    try {
        while (true) {
            EntryBatch batch;
            {
                std::unique_lock lock(mu);
                cv.wait(lock, [&] { return abort || ready.contains(next_emit); });
                if (abort) break;
                auto node = ready.extract(next_emit);
                batch = std::move(node.mapped());
            }
            stats.entries += batch.entries.size();
            stats.skipped += batch.skipped.size();
            sink(std::move(batch));
            {
                std::lock_guard lock(mu);
                ++next_emit;
                if (next_emit == pages.size()) abort = true;
            }
            cv.notify_all();
            if (next_emit == pages.size()) break;
        }
    } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        abort = true;
    }
    cv.notify_all();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return stats;
}

}  // namespace ctphish::ctlog
