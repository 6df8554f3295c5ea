#pragma once

#include <cstdio>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctphish/cert/certificate.hpp"
#include "ctphish/classifiers/model.hpp"
#include "ctphish/dataset/labeled.hpp"
#include "ctphish/intel/store.hpp"
#include "ctphish/util/json.hpp"

namespace ctphish::pipeline {

struct VerificationEvent {
    intel::Verdict verdict = intel::Verdict::no_evidence;
    UtcTime verified_at{};
    bool operator==(const VerificationEvent&) const = default;
};

struct SourceRef {
    std::string log;
    std::uint64_t index = 0;
    bool operator==(const SourceRef&) const = default;
};

struct ClassificationResult {
    Sha256Digest fingerprint{};
    std::vector<std::string> domains;
    double score = 0.0;
    double threshold = 0.0;
    dataset::Label predicted = dataset::Label::benign;
    std::string classifier;
    UtcTime classified_at{};
    std::optional<SourceRef> source;
    std::vector<double> domain_scores;
    std::vector<VerificationEvent> verification;  ///< append-only, nondecreasing verified_at

    /// Latest verdict, if verified at all.
    std::optional<intel::Verdict> verdict() const;
    bool confirmed() const { return verdict() == intel::Verdict::confirmed_phish; }

    /// Appends an event. A confirmed result stays confirmed, and an event
    /// older than the last one is stamped with the last timestamp.
    void add_verification(intel::Verdict v, UtcTime at);

    bool operator==(const ClassificationResult&) const = default;
};

ClassificationResult make_result(const cert::CertificateRecord& record, const classifiers::ScoreDetail& detail,
                                 double threshold, std::string classifier, UtcTime classified_at);

Json to_json(const ClassificationResult& r);
ClassificationResult result_from_json(const Json& j);

/// Result lines of a store plus verification lines folded into them.
std::vector<ClassificationResult> parse_results(std::string_view jsonl);
std::vector<ClassificationResult> load_results(const std::string& path);
/// Writes a compacted result file (one line per result, history inline).
void write_results(const std::string& path, const std::vector<ClassificationResult>& results);
std::string results_to_jsonl(const std::vector<ClassificationResult>& results);

/// Append-only JSONL result store. Each classification becomes a result
/// line; later verifications become separate verification lines that
/// reference the fingerprint. Every append is flushed.
class ResultStore {
public:
    explicit ResultStore(std::string path);
    ~ResultStore();
    ResultStore(const ResultStore&) = delete;
    ResultStore& operator=(const ResultStore&) = delete;

    void append(const ClassificationResult& r);
    void append_verification(const Sha256Digest& fingerprint, const VerificationEvent& e);
    std::vector<ClassificationResult> load() const;
    const std::string& path() const { return path_; }

private:
    void write_line(const std::string& line);

    std::string path_;
    std::FILE* file_ = nullptr;
    mutable std::mutex mu_;
};

struct ReverifyReport {
    std::size_t checked = 0;
    std::size_t confirmed = 0;        ///< confirmed after this pass
    std::size_t newly_confirmed = 0;  ///< flipped by this pass
};

/// Verifies every result against `verifier` and appends one event each.
ReverifyReport reverify(std::vector<ClassificationResult>& results, const intel::Verifier& verifier, UtcTime at);
/// Same, reading and appending to a store. Returns the updated results.
std::vector<ClassificationResult> reverify(ResultStore& store, const intel::Verifier& verifier, UtcTime at,
                                           ReverifyReport* report = nullptr);

}  // namespace ctphish::pipeline
