#include "ctphish/pipeline/result.hpp"

#include <filesystem>
#include <unordered_map>

#include "ctphish/data.hpp"
#include "ctphish/errors.hpp"

namespace ctphish::pipeline {

namespace {

Sha256Digest digest_from_hex(const std::string& hex) {
    Bytes b = from_hex(hex);
    if (b.size() != 32) throw std::invalid_argument("fingerprint must be 32 bytes");
    Sha256Digest d;
    std::copy(b.begin(), b.end(), d.begin());
    return d;
}

Json event_json(const VerificationEvent& e) {
    return {{"verdict", intel::to_string(e.verdict)}, {"verified_at", format_rfc3339(e.verified_at)}};
}

VerificationEvent event_from_json(const Json& j) {
    return {intel::verdict_from_string(j.at("verdict").get<std::string>()),
            parse_rfc3339(j.at("verified_at").get<std::string>())};
}

std::string key_of(const Sha256Digest& d) { return {d.begin(), d.end()}; }

}  // namespace

std::optional<intel::Verdict> ClassificationResult::verdict() const {
    if (verification.empty()) return std::nullopt;
    return verification.back().verdict;
}

void ClassificationResult::add_verification(intel::Verdict v, UtcTime at) {
    if (!verification.empty()) {
        const auto& last = verification.back();
        if (at < last.verified_at) at = last.verified_at;
        if (last.verdict == intel::Verdict::confirmed_phish) v = intel::Verdict::confirmed_phish;
    }
    verification.push_back({v, at});
}

ClassificationResult make_result(const cert::CertificateRecord& record, const classifiers::ScoreDetail& detail,
                                 double threshold, std::string classifier, UtcTime classified_at) {
    ClassificationResult r;
    r.fingerprint = record.fingerprint;
    r.domains = record.domains();
    r.score = detail.score;
    r.threshold = threshold;
    r.predicted = detail.score >= threshold ? dataset::Label::phish : dataset::Label::benign;
    r.classifier = std::move(classifier);
    r.classified_at = classified_at;
    r.domain_scores = detail.domain_scores;
    if (record.ct_log_index) r.source = SourceRef{record.ct_log_index->log_id, record.ct_log_index->index};
    return r;
}

Json to_json(const ClassificationResult& r) {
    Json j = {{"kind", "result"},
              {"fingerprint", to_hex(r.fingerprint)},
              {"domains", r.domains},
              {"score", r.score},
              {"threshold", r.threshold},
              {"predicted", dataset::to_string(r.predicted)},
              {"classifier", r.classifier},
              {"classified_at", format_rfc3339(r.classified_at)}};
    if (r.source) j["source"] = {{"log", r.source->log}, {"index", r.source->index}};
    if (!r.domain_scores.empty()) j["domain_scores"] = r.domain_scores;
    j["verification"] = Json::array();
    for (const auto& e : r.verification) j["verification"].push_back(event_json(e));
    return j;
}

ClassificationResult result_from_json(const Json& j) {
    ClassificationResult r;
    r.fingerprint = digest_from_hex(j.at("fingerprint").get<std::string>());
    r.domains = j.at("domains").get<std::vector<std::string>>();
    r.score = j.at("score").get<double>();
    r.threshold = j.at("threshold").get<double>();
    r.predicted = dataset::label_from_string(j.at("predicted").get<std::string>());
    r.classifier = j.value("classifier", "");
    r.classified_at = parse_rfc3339(j.at("classified_at").get<std::string>());
    if (j.contains("source")) {
        r.source = SourceRef{j["source"].at("log").get<std::string>(), j["source"].at("index").get<std::uint64_t>()};
    }
    if (j.contains("domain_scores")) r.domain_scores = j["domain_scores"].get<std::vector<double>>();
    if (j.contains("verification")) {
        for (const auto& e : j["verification"]) r.verification.push_back(event_from_json(e));
    }
    return r;
}

std::vector<ClassificationResult> parse_results(std::string_view jsonl) {
    std::vector<ClassificationResult> out;
    std::unordered_map<std::string, std::size_t> at;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < jsonl.size()) {
        auto nl = jsonl.find('\n', pos);
        auto line = jsonl.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? jsonl.size() : nl + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            auto j = Json::parse(line);
            std::string kind = j.value("kind", "result");
            if (kind == "verification") {
                auto fp = digest_from_hex(j.at("fingerprint").get<std::string>());
                auto it = at.find(key_of(fp));
                if (it == at.end()) throw std::invalid_argument("verification for unknown fingerprint");
                auto e = event_from_json(j);
                out[it->second].add_verification(e.verdict, e.verified_at);
            } else {
                auto r = result_from_json(j);
                auto [it, fresh] = at.emplace(key_of(r.fingerprint), out.size());
                if (fresh) {
                    out.push_back(std::move(r));
                } else {
                    out[it->second] = std::move(r);
                }
            }
        } catch (const std::exception& e) {
            throw StoreError("result line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<ClassificationResult> load_results(const std::string& path) {
    if (!std::filesystem::exists(path)) throw StoreError("no result file " + path);
    return parse_results(data::read_file(path));
}

std::string results_to_jsonl(const std::vector<ClassificationResult>& results) {
    std::string out;
    for (const auto& r : results) out += to_json(r).dump() + "\n";
    return out;
}

void write_results(const std::string& path, const std::vector<ClassificationResult>& results) {
    data::write_file_atomic(path, results_to_jsonl(results));
}

ResultStore::ResultStore(std::string path) : path_(std::move(path)) {
    auto parent = std::filesystem::path(path_).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    file_ = std::fopen(path_.c_str(), "ab");
    if (!file_) throw StoreError("cannot open result store " + path_);
}

ResultStore::~ResultStore() {
    if (file_) std::fclose(file_);
}

void ResultStore::write_line(const std::string& line) {
    std::lock_guard lock(mu_);
    if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fputc('\n', file_) == EOF ||
        std::fflush(file_) != 0) {
        throw StoreError("write failed on " + path_);
    }
}

void ResultStore::append(const ClassificationResult& r) { write_line(to_json(r).dump()); }

void ResultStore::append_verification(const Sha256Digest& fingerprint, const VerificationEvent& e) {
    Json j = event_json(e);
    j["kind"] = "verification";
    j["fingerprint"] = to_hex(fingerprint);
    write_line(j.dump());
}

std::vector<ClassificationResult> ResultStore::load() const {
    std::lock_guard lock(mu_);
    return parse_results(data::read_file(path_));
}

ReverifyReport reverify(std::vector<ClassificationResult>& results, const intel::Verifier& verifier, UtcTime at) {
    ReverifyReport rep;
    for (auto& r : results) {
        bool was = r.confirmed();
        r.add_verification(verifier.verify(r.domains), at);
        ++rep.checked;
        if (r.confirmed()) {
            ++rep.confirmed;
            if (!was) ++rep.newly_confirmed;
        }
    }
    return rep;
}

std::vector<ClassificationResult> reverify(ResultStore& store, const intel::Verifier& verifier, UtcTime at,
                                           ReverifyReport* report) {
    auto results = store.load();
    auto rep = reverify(results, verifier, at);
    for (const auto& r : results) store.append_verification(r.fingerprint, r.verification.back());
    if (report) *report = rep;
    return results;
}

}  // namespace ctphish::pipeline
