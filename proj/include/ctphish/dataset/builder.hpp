#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ctphish/cert/certificate.hpp"
#include "ctphish/ctlog/chunk_plan.hpp"
#include "ctphish/ctlog/fetcher.hpp"
#include "ctphish/dataset/labeled.hpp"
#include "ctphish/intel/store.hpp"
#include "ctphish/util/json.hpp"

namespace ctphish::dataset {

/// Lowercase registered domains.
struct FilterLists {
    std::unordered_set<std::string> benign_services;
    std::unordered_set<std::string> popular_domains;
    std::unordered_set<std::string> malicious_domains;  ///< empty by default

    /// Bundled benign_services.txt and popular_domains.txt.
    static FilterLists bundled();
    /// Newline-delimited files; empty paths fall back to the bundled list
    /// (benign, popular) or to an empty set (malicious).
    static FilterLists load(const std::string& benign_services, const std::string& popular,
                            const std::string& malicious);
    static std::unordered_set<std::string> parse_list(std::string_view text);
};

enum class DropReason { parse_error, duplicate, phishing_db, prefix, malicious_list, benign_service, popular };
std::string_view to_string(DropReason r);

struct FilterReport {
    std::size_t input = 0;
    std::size_t output = 0;
    std::map<DropReason, std::size_t> drops;
    std::vector<std::string> warnings;

    std::size_t dropped() const;
    /// input == output + sum of drops
    bool balanced() const { return input == output + dropped(); }
    Json to_json() const;
};

struct FilterResult {
    std::vector<cert::CertificateRecord> records;
    FilterReport report;
};

/// Benign filters over already-downloaded records: duplicates, then phishing
/// URL database, hash prefixes, malicious list. Each drop has one reason.
FilterResult filter_benign(std::vector<cert::CertificateRecord> records, const FilterLists& filters,
                           const intel::IntelSnapshot& intel);

struct BenignSource {
    ctlog::LogSource log;
    ctlog::RetryPolicy policy;
    ctlog::FetchOptions fetch;
};

/// Downloads every chunk, parses entries and applies filter_benign. Chunk
/// failures become warnings; undecodable entries count as parse_error drops.
FilterResult build_benign(const ctlog::ChunkPlan& chunks, const BenignSource& source, const FilterLists& filters,
                          const intel::IntelSnapshot& intel);

/// Drops duplicates, then records with any registered domain among the
/// benign services, then among the popular domains.
FilterResult filter_malicious(std::vector<cert::CertificateRecord> records, const FilterLists& filters);

struct TlsFetchOptions {
    std::chrono::milliseconds timeout{10'000};
    int attempts = 2;
    /// Connect to this address instead of resolving the URL host (SNI still
    /// carries the URL host).
    std::string connect_host;
    std::optional<int> port;  ///< default: URL port or 443
};

struct TlsFetchResult {
    std::optional<cert::CertificateRecord> record;
    std::string failure;  ///< "BadUrl", "ConnectFailed" or "HandshakeFailed" when record is empty
    std::string host;
};

/// Opens a TLS connection, captures the leaf certificate and closes without
/// sending any application data.
TlsFetchResult fetch_malicious_cert(const std::string& url, const TlsFetchOptions& options = {});

/// Parallel fetch over many URLs; results follow the input order.
std::vector<TlsFetchResult> fetch_malicious_certs(const std::vector<std::string>& urls,
                                                  const TlsFetchOptions& options, std::size_t workers);

struct AssembleOptions {
    bool balance = true;
    std::uint64_t seed = 0;
    UtcTime created_at{};
};

/// Labels and optionally balances the two classes by seeded uniform
/// subsampling of the larger one (original order kept). Benign records whose
/// fingerprint also appears as phish are removed. Throws EmptyClass.
LabeledDataset assemble(const std::vector<cert::CertificateRecord>& benign,
                        const std::vector<cert::CertificateRecord>& phish, const AssembleOptions& options);

}  // namespace ctphish::dataset
