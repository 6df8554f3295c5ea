#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "ctphish/classifiers/model.hpp"
#include "ctphish/ctlog/chunk_plan.hpp"
#include "ctphish/ctlog/follower.hpp"
#include "ctphish/pipeline/hooks.hpp"
#include "ctphish/pipeline/queue.hpp"
#include "ctphish/pipeline/result.hpp"

namespace ctphish::pipeline {

struct ClassifyOptions {
    double threshold = 0.5;
    std::size_t workers = 1;       ///< classification threads
    std::size_t queue_capacity = 16;  ///< batches between fetch and classify
    ctlog::RetryPolicy retry;
    ctlog::FetchOptions fetch;
    HookDispatcher* hooks = nullptr;
    const intel::Verifier* verifier = nullptr;  ///< verify each result at emission
    std::function<UtcTime()> clock;             ///< classified_at; defaults to utc_now
    bool classified_at_from_leaf = false;       ///< use the leaf timestamp instead of the clock
    bool dedup = true;                          ///< drop repeated fingerprints before scoring
    std::chrono::milliseconds outage_backoff{5000};
    std::size_t max_source_failures = 0;  ///< consecutive failures before giving up a log; 0 = never
    const std::atomic<bool>* stop = nullptr;
};

struct ClassifyStats {
    std::uint64_t batches = 0;
    std::uint64_t entries = 0;
    std::uint64_t parse_errors = 0;
    std::uint64_t duplicates = 0;
    std::uint64_t scored = 0;
    std::uint64_t emitted = 0;
    std::uint64_t positives = 0;
    std::uint64_t hooks_dispatched = 0;
    std::uint64_t source_failures = 0;
    std::uint64_t queue_high_water = 0;
    std::uint64_t queue_full_waits = 0;
    std::vector<std::uint64_t> scored_per_worker;

    Json to_json() const;
};

using ResultSink = std::function<void(const ClassificationResult&)>;

/// Stage-parallel core shared by live and range classification. Producers
/// submit batches per log; a worker pool parses, deduplicates and scores
/// them; results are handed to the sink one at a time, per log in submission
/// order. Positives go to the hook dispatcher.
class ClassificationEngine {
public:
    ClassificationEngine(const classifiers::Scorer& scorer, ClassifyOptions options, std::vector<std::string> logs,
                         ResultSink sink);
    ~ClassificationEngine();
    ClassificationEngine(const ClassificationEngine&) = delete;
    ClassificationEngine& operator=(const ClassificationEngine&) = delete;

    /// Blocks while the queue is full. false once the engine has failed or
    /// finished. Not safe to call concurrently for the same log.
    bool submit(std::size_t log, ctlog::EntryBatch batch);
    /// Waits for every submitted batch; rethrows the first worker error.
    ClassifyStats finish();

    void add_source_failure();

private:
    struct WorkItem {
        std::size_t log;
        std::uint64_t seq;
        ctlog::EntryBatch batch;
    };
    void worker(std::size_t id);
    std::vector<ClassificationResult> process(std::size_t id, const WorkItem& item);
    void emit(std::size_t log, std::uint64_t seq, std::vector<ClassificationResult> results);

    const classifiers::Scorer& scorer_;
    ClassifyOptions options_;
    std::string classifier_;
    std::vector<std::string> logs_;
    ResultSink sink_;
    BoundedQueue<WorkItem> queue_;
    std::vector<std::uint64_t> next_submit_;

    std::mutex seen_mu_;
    std::unordered_set<std::string> seen_;

    std::mutex emit_mu_;
    std::vector<std::uint64_t> next_emit_;
    std::vector<std::map<std::uint64_t, std::vector<ClassificationResult>>> pending_;

    std::mutex stats_mu_;
    ClassifyStats stats_;
    std::exception_ptr error_;
    std::atomic<bool> failed_{false};
    bool finished_ = false;
    std::vector<std::thread> threads_;
};

struct StreamSource {
    ctlog::LogSource log;
    ctlog::FollowOptions follow;
    ctlog::CursorStore* cursors = nullptr;  ///< in-memory cursors when null
};

/// Live classification: follows every source on its own thread until each
/// follower stops (max_polls, idle_polls or the stop flag). An unreachable
/// log is retried after outage_backoff without affecting the others.
ClassifyStats classify_stream(const std::vector<StreamSource>& sources, const classifiers::Scorer& scorer,
                              ClassifyOptions options, const ResultSink& sink);

struct RangeSpec {
    std::optional<ctlog::TimeSpan> span;                             ///< by leaf timestamp
    std::optional<std::pair<std::uint64_t, std::uint64_t>> indices;  ///< half-open, clamped to the tree
    std::uint64_t chunk_size = 1000;
};

struct RangeRun {
    std::vector<ClassificationResult> results;  ///< source order, then log index
    ClassifyStats stats;
    std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> ranges;
};

/// Retrospective classification of an index or time range over whole
/// streams (gap 0). Duplicates keep the occurrence in the earliest source
/// and lowest index, so the output is independent of worker count and
/// timing. classified_at is the leaf timestamp.
RangeRun classify_range(const std::vector<ctlog::LogSource>& sources, const RangeSpec& range,
                        const classifiers::Scorer& scorer, ClassifyOptions options);

/// Resolves the index range of one log for `range`; nullopt for an empty span.
std::optional<std::pair<std::uint64_t, std::uint64_t>> resolve_range(ctlog::LogClient& client,
                                                                      const RangeSpec& range);

}  // namespace ctphish::pipeline
