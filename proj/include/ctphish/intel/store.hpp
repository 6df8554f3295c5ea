#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ctphish/cert/domain.hpp"
#include "ctphish/intel/feeds.hpp"
#include "ctphish/util/bytes.hpp"

struct sqlite3;

namespace ctphish::intel {

using HashPrefix = std::array<std::uint8_t, 4>;

HashPrefix prefix_of(const Sha256Digest& digest);

/// Set of 4-byte SHA-256 prefixes. Optionally carries full hashes for
/// confirmation.
class PrefixSet {
public:
    void insert(HashPrefix p) { prefixes_.insert(pack(p)); }
    bool contains(HashPrefix p) const { return prefixes_.contains(pack(p)); }
    void insert_full_hash(const Sha256Digest& d);
    bool contains_full_hash(const Sha256Digest& d) const;

    std::size_t size() const { return prefixes_.size(); }
    bool empty() const { return prefixes_.empty(); }
    void merge(const PrefixSet& other);
    std::vector<HashPrefix> sorted() const;
    std::vector<Sha256Digest> full_hashes() const;

    UtcTime snapshot_time{};

    /// One 8-hex-digit prefix (or 64-hex-digit full hash) per line.
    static PrefixSet parse(std::string_view text);

private:
    static std::uint32_t pack(HashPrefix p) {
        return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
    }
    std::unordered_set<std::uint32_t> prefixes_;
    std::unordered_set<std::string> full_hashes_;
};

/// URL expressions hashed for a domain: "d/" and "registered_domain(d)/"
/// (a leading "*." is dropped first).
std::vector<std::string> url_expressions(const cert::DomainName& d);

bool prefix_check(std::span<const cert::DomainName> domains, const PrefixSet& prefixes);

/// Immutable, in-memory view of the store used by one classification run.
class IntelSnapshot {
public:
    IntelSnapshot() = default;
    IntelSnapshot(std::vector<IntelEntry> entries, PrefixSet prefixes);

    /// Exact host match, or a wildcard domain "*.p" matching a host "x.p".
    std::optional<IntelEntry> match_domains(std::span<const cert::DomainName> domains) const;
    const PrefixSet& prefixes() const { return prefixes_; }
    std::size_t entry_count() const { return entries_.size(); }
    const std::vector<IntelEntry>& entries() const { return entries_; }

private:
    std::vector<IntelEntry> entries_;
    std::unordered_map<std::string, std::size_t> by_host_;
    std::unordered_map<std::string, std::size_t> by_parent_;
    PrefixSet prefixes_;
};

enum class Verdict { confirmed_phish, no_evidence };

std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

/// Remote reputation lookups; the bundled implementation knows nothing.
class ReputationClient {
public:
    virtual ~ReputationClient() = default;
    /// true = listed as malicious, nullopt = no information.
    virtual std::optional<bool> lookup(const std::string& domain) = 0;
};

class NoopReputationClient : public ReputationClient {
public:
    std::optional<bool> lookup(const std::string&) override { return std::nullopt; }
};

struct VerifyOptions {
    /// Count prefix hits only when the full hash is also known.
    bool require_full_hash = false;
};

class Verifier {
public:
    explicit Verifier(const IntelSnapshot& snapshot, VerifyOptions options = {},
                      ReputationClient* remote = nullptr);
    Verdict verify(const std::vector<std::string>& domains) const;

private:
    const IntelSnapshot& snapshot_;
    VerifyOptions options_;
    ReputationClient* remote_;
};

struct IngestReport {
    std::vector<IntelEntry> new_entries;
    std::size_t duplicates = 0;
    std::size_t malformed = 0;
};

/// File-backed phishing URL database (SQLite). One writer at a time;
/// queries go through snapshot().
class IntelStore {
public:
    static constexpr int k_schema_version = 1;

    /// Opens or creates the store; ":memory:" gives a private in-memory store.
    explicit IntelStore(const std::string& path);
    ~IntelStore();
    IntelStore(const IntelStore&) = delete;
    IntelStore& operator=(const IntelStore&) = delete;

    IngestReport ingest(FeedSource source, std::string_view raw, UtcTime fetched_at);
    IngestReport add_entries(const std::vector<IntelEntry>& entries);
    std::size_t add_prefixes(const PrefixSet& prefixes);

    IntelSnapshot snapshot() const;
    std::size_t entry_count() const;

    std::optional<UtcTime> last_fetch(const std::string& feed) const;
    void set_last_fetch(const std::string& feed, UtcTime t);

private:
    void exec(const char* sql) const;

    sqlite3* db_ = nullptr;
    mutable std::mutex mu_;
};

}  // namespace ctphish::intel
