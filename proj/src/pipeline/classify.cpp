#include "ctphish/pipeline/classify.hpp"

#include <algorithm>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "ctphish/ctlog/client.hpp"
#include "ctphish/ctlog/fetcher.hpp"
#include "ctphish/errors.hpp"

namespace ctphish::pipeline {

Json ClassifyStats::to_json() const {
    return {{"batches", batches},
            {"entries", entries},
            {"parse_errors", parse_errors},
            {"duplicates", duplicates},
            {"scored", scored},
            {"emitted", emitted},
            {"positives", positives},
            {"hooks_dispatched", hooks_dispatched},
            {"source_failures", source_failures},
            {"queue_high_water", queue_high_water},
            {"queue_full_waits", queue_full_waits},
            {"scored_per_worker", scored_per_worker}};
}

ClassificationEngine::ClassificationEngine(const classifiers::Scorer& scorer, ClassifyOptions options,
                                           std::vector<std::string> logs, ResultSink sink)
    : scorer_(scorer),
      options_(std::move(options)),
      classifier_(scorer.name()),
      logs_(std::move(logs)),
      sink_(std::move(sink)),
      queue_(options_.queue_capacity),
      next_submit_(logs_.size(), 0),
      next_emit_(logs_.size(), 0),
      pending_(logs_.size()) {
    if (!options_.clock) options_.clock = utc_now;
    const std::size_t workers = std::max<std::size_t>(1, options_.workers);
    stats_.scored_per_worker.assign(workers, 0);
    for (std::size_t i = 0; i < workers; ++i) threads_.emplace_back([this, i] { worker(i); });
}

ClassificationEngine::~ClassificationEngine() {
    if (!finished_) {
        queue_.close();
        for (auto& t : threads_) t.join();
    }
}

bool ClassificationEngine::submit(std::size_t log, ctlog::EntryBatch batch) {
    if (failed_ || log >= logs_.size()) return false;
    return queue_.push(WorkItem{log, next_submit_[log]++, std::move(batch)});
}

void ClassificationEngine::add_source_failure() {
    std::lock_guard lock(stats_mu_);
    ++stats_.source_failures;
}

ClassifyStats ClassificationEngine::finish() {
    if (!finished_) {
        queue_.close();
        for (auto& t : threads_) t.join();
        finished_ = true;
    }
    if (error_) std::rethrow_exception(error_);
    std::lock_guard lock(stats_mu_);
    stats_.queue_high_water = queue_.high_water();
    stats_.queue_full_waits = queue_.full_waits();
    return stats_;
}

void ClassificationEngine::worker(std::size_t id) {
    while (auto item = queue_.pop()) {
        if (failed_) continue;
        try {
            auto results = process(id, *item);
            emit(item->log, item->seq, std::move(results));
        } catch (...) {
            std::lock_guard lock(stats_mu_);
            if (!error_) error_ = std::current_exception();
            failed_ = true;
            queue_.close();
        }
    }
}

std::vector<ClassificationResult> ClassificationEngine::process(std::size_t id, const WorkItem& item) {
    std::vector<ClassificationResult> out;
    std::uint64_t parse_errors = item.batch.skipped.size();
    std::uint64_t duplicates = 0;
    std::uint64_t scored = 0;
    const std::string& log = logs_[item.log];
    for (const auto& e : item.batch.entries) {
        cert::CertificateRecord rec;
        try {
            Bytes wrapped;
            ByteView der = e.cert_der;
            if (der.empty() && !e.tbs.empty()) {
                wrapped = ctlog::wrap_tbs(e.tbs);
                der = wrapped;
            }
            rec = cert::parse_der(der, e.timestamp, cert::CtLogIndex{log, e.index});
        } catch (const MalformedDer& ex) {
            ++parse_errors;
            spdlog::debug("{}#{}: {}", log, e.index, ex.what());
            continue;
        }
        if (options_.dedup) {
            std::lock_guard lock(seen_mu_);
            if (!seen_.emplace(rec.fingerprint.begin(), rec.fingerprint.end()).second) {
                ++duplicates;
                continue;
            }
        }
        auto detail = scorer_.score_record(rec);
        ++scored;
        UtcTime at = options_.classified_at_from_leaf ? e.timestamp : options_.clock();
        auto r = make_result(rec, detail, options_.threshold, classifier_, at);
        if (options_.verifier) r.add_verification(options_.verifier->verify(r.domains), at);
        out.push_back(std::move(r));
    }
    std::lock_guard lock(stats_mu_);
    ++stats_.batches;
    stats_.entries += item.batch.entries.size() + item.batch.skipped.size();
    stats_.parse_errors += parse_errors;
    stats_.duplicates += duplicates;
    stats_.scored += scored;
    stats_.scored_per_worker[id] += scored;
    return out;
}

void ClassificationEngine::emit(std::size_t log, std::uint64_t seq, std::vector<ClassificationResult> results) {
    std::lock_guard lock(emit_mu_);
    auto& pending = pending_[log];
    pending.emplace(seq, std::move(results));
    std::uint64_t emitted = 0, positives = 0, hooks = 0;
    while (!pending.empty() && pending.begin()->first == next_emit_[log]) {
        auto node = pending.extract(pending.begin());
        for (const auto& r : node.mapped()) {
            if (sink_) sink_(r);
            ++emitted;
            if (r.predicted == dataset::Label::phish) {
                ++positives;
                if (options_.hooks) hooks += options_.hooks->dispatch(r);
            }
        }
        ++next_emit_[log];
    }
    std::lock_guard slock(stats_mu_);
    stats_.emitted += emitted;
    stats_.positives += positives;
    stats_.hooks_dispatched += hooks;
}

namespace {

struct StopRequested {};

bool interruptible_sleep(std::chrono::milliseconds d, const std::atomic<bool>* stop) {
    auto until = std::chrono::steady_clock::now() + d;
    while (std::chrono::steady_clock::now() < until) {
        if (stop && stop->load()) return false;
        std::this_thread::sleep_for(std::min<std::chrono::milliseconds>(d, std::chrono::milliseconds(50)));
    }
    return !(stop && stop->load());
}

}  // namespace

ClassifyStats classify_stream(const std::vector<StreamSource>& sources, const classifiers::Scorer& scorer,
                              ClassifyOptions options, const ResultSink& sink) {
    std::vector<std::string> names;
    for (const auto& s : sources) names.push_back(s.log.name);
    ClassificationEngine engine(scorer, options, names, sink);
    const std::atomic<bool>* stop = options.stop;

    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        threads.emplace_back([&, i] {
            const auto& src = sources[i];
            ctlog::CursorStore local("");
            ctlog::CursorStore* cursors = src.cursors ? src.cursors : &local;
            auto follow = src.follow;
            if (!follow.stop) follow.stop = stop;
            std::size_t failures = 0;
            while (!(stop && stop->load())) {
                try {
                    ctlog::LogFollower follower(src.log, options.retry, cursors, follow);
                    auto st = follower.run([&](ctlog::EntryBatch&& batch) {
                        if (stop && stop->load()) throw StopRequested{};
                        failures = 0;
                        if (!engine.submit(i, std::move(batch))) throw StopRequested{};
                    });
                    spdlog::info("{}: {} polls, {} entries, next index {}", src.log.name, st.polls, st.entries,
                                 st.next_index);
                    break;
                } catch (const StopRequested&) {
                    break;
                } catch (const Error& e) {
                    engine.add_source_failure();
                    ++failures;
                    spdlog::warn("{}: {} (failure {})", src.log.name, e.what(), failures);
                    if (options.max_source_failures && failures >= options.max_source_failures) break;
                    if (!interruptible_sleep(options.outage_backoff, stop)) break;
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    return engine.finish();
}

std::optional<std::pair<std::uint64_t, std::uint64_t>> resolve_range(ctlog::LogClient& client,
                                                                      const RangeSpec& range) {
    const std::uint64_t size = client.get_sth().tree_size;
    std::uint64_t first = 0, last = size;
    if (range.indices) {
        first = std::min(range.indices->first, size);
        last = std::min(range.indices->second, size);
    }
    if (range.span) {
        try {
            auto [a, b] = ctlog::locate_span(client, size, *range.span);
            first = std::max(first, a);
            last = std::min(last, b);
        } catch (const EmptySpan&) {
            return std::nullopt;
        }
    }
    if (first >= last) return std::nullopt;
    return std::make_pair(first, last);
}

RangeRun classify_range(const std::vector<ctlog::LogSource>& sources, const RangeSpec& range,
                        const classifiers::Scorer& scorer, ClassifyOptions options) {
    options.dedup = false;
    options.classified_at_from_leaf = true;

    RangeRun run;
    std::vector<std::string> names;
    std::vector<ctlog::ChunkPlan> plans;
    for (const auto& s : sources) {
        names.push_back(s.name);
        ctlog::LogClient client(s, options.retry);
        auto r = resolve_range(client, range);
        if (r) {
            plans.push_back(ctlog::plan_chunks(r->first, r->second, std::max<std::uint64_t>(1, range.chunk_size), 0));
            run.ranges[s.name] = *r;
        } else {
            plans.emplace_back();
            run.ranges[s.name] = {0, 0};
        }
    }

    std::vector<std::vector<ClassificationResult>> per_log(sources.size());
    std::mutex mu;
    std::unordered_map<std::string, std::size_t> ordinal;
    for (std::size_t i = 0; i < names.size(); ++i) ordinal[names[i]] = i;
    ClassificationEngine engine(scorer, options, names, [&](const ClassificationResult& r) {
        std::lock_guard lock(mu);
        per_log[ordinal.at(r.source->log)].push_back(r);
    });

    std::vector<std::thread> threads;
    std::exception_ptr error;
    std::mutex error_mu;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        if (plans[i].chunks.empty()) continue;
        threads.emplace_back([&, i] {
            try {
                ctlog::fetch_ranges(sources[i], options.retry, plans[i].chunks, options.fetch,
                                    [&](ctlog::EntryBatch&& batch) {
                                        if (!engine.submit(i, std::move(batch))) throw StopRequested{};
                                    });
            } catch (const StopRequested&) {
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    run.stats = engine.finish();
    if (error) std::rethrow_exception(error);

    std::unordered_set<std::string> seen;
    std::uint64_t duplicates = 0;
    for (auto& results : per_log) {
        for (auto& r : results) {
            if (seen.emplace(r.fingerprint.begin(), r.fingerprint.end()).second) {
                run.results.push_back(std::move(r));
            } else {
                ++duplicates;
            }
        }
    }
    run.stats.duplicates = duplicates;
    run.stats.emitted = run.results.size();
    run.stats.positives = static_cast<std::uint64_t>(std::count_if(
        run.results.begin(), run.results.end(), [](const auto& r) { return r.predicted == dataset::Label::phish; }));
    return run;
}

}  // namespace ctphish::pipeline
