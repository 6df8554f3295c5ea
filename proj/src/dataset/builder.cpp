#include "ctphish/dataset/builder.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <set>

#include "ctphish/cert/domain.hpp"
#include "ctphish/classifiers/rng.hpp"
#include "ctphish/data.hpp"
#include "ctphish/errors.hpp"

namespace ctphish::dataset {

std::unordered_set<std::string> FilterLists::parse_list(std::string_view text) {
    std::unordered_set<std::string> out;
    for (const auto& line : data::lines(text)) {
        // Rank files ("rank,domain") are accepted too.
        auto comma = line.find(',');
        std::string name = comma == std::string::npos ? line : line.substr(comma + 1);
        auto d = cert::decompose_domain(name);
        out.insert(d.registered_domain.empty() ? d.full : d.registered_domain);
    }
    return out;
}

FilterLists FilterLists::bundled() {
    FilterLists f;
    f.benign_services = parse_list(data::load("benign_services.txt"));
    f.popular_domains = parse_list(data::load("popular_domains.txt"));
    return f;
}

FilterLists FilterLists::load(const std::string& benign_services, const std::string& popular,
                              const std::string& malicious) {
    FilterLists f = bundled();
    if (!benign_services.empty()) f.benign_services = parse_list(data::read_file(benign_services));
    if (!popular.empty()) f.popular_domains = parse_list(data::read_file(popular));
    if (!malicious.empty()) f.malicious_domains = parse_list(data::read_file(malicious));
    return f;
}

std::string_view to_string(DropReason r) {
    switch (r) {
        case DropReason::parse_error: return "parse_error";
        case DropReason::duplicate: return "duplicate";
        case DropReason::phishing_db: return "phishing_db";
        case DropReason::prefix: return "prefix";
        case DropReason::malicious_list: return "malicious_list";
        case DropReason::benign_service: return "benign_service";
        case DropReason::popular: return "popular";
    }
    return "unknown";
}

std::size_t FilterReport::dropped() const {
    std::size_t n = 0;
    for (const auto& [_, c] : drops) n += c;
    return n;
}

Json FilterReport::to_json() const {
    Json d = Json::object();
    for (const auto& [r, c] : drops) d[std::string(to_string(r))] = c;
    return Json{{"input", input}, {"output", output}, {"drops", d}, {"warnings", warnings}};
}

namespace {

std::vector<cert::DomainName> decomposed(const cert::CertificateRecord& r) {
    std::vector<cert::DomainName> out;
    for (const auto& d : r.domains()) out.push_back(cert::decompose_domain(d));
    return out;
}

bool any_registered_in(const std::vector<cert::DomainName>& ds, const std::unordered_set<std::string>& set) {
    return std::any_of(ds.begin(), ds.end(), [&](const auto& d) { return set.contains(d.registered_domain); });
}

}  // namespace

FilterResult filter_benign(std::vector<cert::CertificateRecord> records, const FilterLists& filters,
                           const intel::IntelSnapshot& intel) {
    FilterResult out;
    out.report.input = records.size();
    std::set<Sha256Digest> seen;
    for (auto& r : records) {
        if (!seen.insert(r.fingerprint).second) {
            ++out.report.drops[DropReason::duplicate];
            continue;
        }
        auto ds = decomposed(r);
        if (intel.match_domains(ds)) {
            ++out.report.drops[DropReason::phishing_db];
        } else if (intel::prefix_check(ds, intel.prefixes())) {
            ++out.report.drops[DropReason::prefix];
        } else if (any_registered_in(ds, filters.malicious_domains)) {
            ++out.report.drops[DropReason::malicious_list];
        } else {
            out.records.push_back(std::move(r));
        }
    }
    out.report.output = out.records.size();
    return out;
}

FilterResult build_benign(const ctlog::ChunkPlan& chunks, const BenignSource& source, const FilterLists& filters,
                          const intel::IntelSnapshot& intel) {
    std::vector<cert::CertificateRecord> records;
    std::size_t parse_errors = 0;
    std::vector<std::string> warnings;
    for (const auto& range : chunks.chunks) {
        try {
            ctlog::fetch_ranges(source.log, source.policy, {range}, source.fetch, [&](ctlog::EntryBatch&& batch) {
                parse_errors += batch.skipped.size();
                for (auto& e : batch.entries) {
                    try {
                        records.push_back(cert::parse_der(e.cert_der, e.timestamp,
                                                          cert::CtLogIndex{source.log.name, e.index}));
                    } catch (const MalformedDer&) {
                        ++parse_errors;
                    }
                }
            });
        } catch (const Error& e) {
            warnings.push_back("chunk [" + std::to_string(range.first) + ", " + std::to_string(range.second) +
                               "): " + e.what());
            spdlog::warn("{}", warnings.back());
        }
    }
    auto result = filter_benign(std::move(records), filters, intel);
    if (parse_errors) result.report.drops[DropReason::parse_error] += parse_errors;
    result.report.input += parse_errors;
    result.report.warnings = std::move(warnings);
    return result;
}

FilterResult filter_malicious(std::vector<cert::CertificateRecord> records, const FilterLists& filters) {
    FilterResult out;
    out.report.input = records.size();
    std::set<Sha256Digest> seen;
    for (auto& r : records) {
        if (!seen.insert(r.fingerprint).second) {
            ++out.report.drops[DropReason::duplicate];
            continue;
        }
        auto ds = decomposed(r);
        if (any_registered_in(ds, filters.benign_services)) {
            ++out.report.drops[DropReason::benign_service];
        } else if (any_registered_in(ds, filters.popular_domains)) {
            ++out.report.drops[DropReason::popular];
        } else {
            out.records.push_back(std::move(r));
        }
    }
    out.report.output = out.records.size();
    return out;
}

namespace {

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    classifiers::CounterRng rng(seed, 0xA55E);
    for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.bounded(n - i)]);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::string provenance_of(const cert::CertificateRecord& r, std::string_view fallback) {
    if (r.ct_log_index) return "ct:" + r.ct_log_index->log_id + "#" + std::to_string(r.ct_log_index->index);
    return std::string(fallback);
}

}  // namespace

LabeledDataset assemble(const std::vector<cert::CertificateRecord>& benign,
                        const std::vector<cert::CertificateRecord>& phish, const AssembleOptions& options) {
    if (benign.empty() || phish.empty()) throw EmptyClass("assemble needs benign and phishing records");
    std::set<Sha256Digest> phish_fps;
    std::vector<const cert::CertificateRecord*> p, b;
    for (const auto& r : phish) {
        if (phish_fps.insert(r.fingerprint).second) p.push_back(&r);
    }
    std::set<Sha256Digest> benign_fps;
    std::size_t conflicts = 0;
    for (const auto& r : benign) {
        if (phish_fps.contains(r.fingerprint)) {
            ++conflicts;
            continue;
        }
        if (benign_fps.insert(r.fingerprint).second) b.push_back(&r);
    }
    if (conflicts) spdlog::warn("assemble: {} benign records also labelled phish were removed", conflicts);
    if (b.empty()) throw EmptyClass("no benign records left after removing label conflicts");

    if (options.balance) {
        auto shrink = [&](std::vector<const cert::CertificateRecord*>& v, std::size_t k, std::uint64_t stream) {
            std::vector<const cert::CertificateRecord*> kept;
            for (auto i : sample_indices(v.size(), k, options.seed ^ stream)) kept.push_back(v[i]);
            v = std::move(kept);
        };
        if (b.size() > p.size()) shrink(b, p.size(), 0);
        if (p.size() > b.size()) shrink(p, b.size(), 1);
    }

    LabeledDataset d;
    d.created_at = options.created_at;
    for (auto* r : b) d.records.push_back({*r, Label::benign, provenance_of(*r, "benign")});
    for (auto* r : p) d.records.push_back({*r, Label::phish, provenance_of(*r, "phish-url")});
    return d;
}

}  // namespace ctphish::dataset
