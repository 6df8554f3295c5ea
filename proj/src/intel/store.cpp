#include "ctphish/intel/store.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <filesystem>

#include "ctphish/errors.hpp"

namespace ctphish::intel {

HashPrefix prefix_of(const Sha256Digest& digest) { return {digest[0], digest[1], digest[2], digest[3]}; }

void PrefixSet::insert_full_hash(const Sha256Digest& d) {
    insert(prefix_of(d));
    full_hashes_.insert(std::string(d.begin(), d.end()));
}

bool PrefixSet::contains_full_hash(const Sha256Digest& d) const {
    return full_hashes_.contains(std::string(d.begin(), d.end()));
}

void PrefixSet::merge(const PrefixSet& other) {
    prefixes_.insert(other.prefixes_.begin(), other.prefixes_.end());
    full_hashes_.insert(other.full_hashes_.begin(), other.full_hashes_.end());
    snapshot_time = std::max(snapshot_time, other.snapshot_time);
}

std::vector<HashPrefix> PrefixSet::sorted() const {
    std::vector<std::uint32_t> packed(prefixes_.begin(), prefixes_.end());
    std::sort(packed.begin(), packed.end());
    std::vector<HashPrefix> out;
    out.reserve(packed.size());
    for (auto v : packed) {
        out.push_back({static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
                       static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)});
    }
    return out;
}

std::vector<Sha256Digest> PrefixSet::full_hashes() const {
    std::vector<std::string> raw(full_hashes_.begin(), full_hashes_.end());
    std::sort(raw.begin(), raw.end());
    std::vector<Sha256Digest> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) std::copy(raw[i].begin(), raw[i].end(), out[i].begin());
    return out;
}

PrefixSet PrefixSet::parse(std::string_view text) {
    PrefixSet set;
    std::size_t start = 0;
    std::size_t lineno = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
        if (line.empty()) continue;
        Bytes b;
        try {
            b = from_hex(line);
        } catch (const std::exception&) {
            throw UnknownFormat("prefix list line " + std::to_string(lineno) + " is not hex");
        }
        if (b.size() == 4) {
            set.insert({b[0], b[1], b[2], b[3]});
        } else if (b.size() == 32) {
            Sha256Digest d;
            std::copy(b.begin(), b.end(), d.begin());
            set.insert_full_hash(d);
        } else {
            throw UnknownFormat("prefix list line " + std::to_string(lineno) + " must be 4 or 32 bytes");
        }
    }
    return set;
}

std::vector<std::string> url_expressions(const cert::DomainName& d) {
    std::string host = d.full;
    if (host.starts_with("*.")) host = host.substr(2);
    std::vector<std::string> out{host + "/"};
    if (!d.registered_domain.empty() && d.registered_domain != host) out.push_back(d.registered_domain + "/");
    return out;
}

bool prefix_check(std::span<const cert::DomainName> domains, const PrefixSet& prefixes) {
    if (prefixes.empty()) return false;
    for (const auto& d : domains) {
        for (const auto& expr : url_expressions(d)) {
            if (prefixes.contains(prefix_of(sha256(as_bytes(expr))))) return true;
        }
    }
    return false;
}

namespace {

std::string parent_of(const std::string& host) {
    auto dot = host.find('.');
    return dot == std::string::npos ? std::string() : host.substr(dot + 1);
}

}  // namespace

IntelSnapshot::IntelSnapshot(std::vector<IntelEntry> entries, PrefixSet prefixes)
    : entries_(std::move(entries)), prefixes_(std::move(prefixes)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        by_host_.try_emplace(entries_[i].host, i);
        auto parent = parent_of(entries_[i].host);
        if (!parent.empty()) by_parent_.try_emplace(parent, i);
    }
}

std::optional<IntelEntry> IntelSnapshot::match_domains(std::span<const cert::DomainName> domains) const {
    for (const auto& d : domains) {
        if (auto it = by_host_.find(d.full); it != by_host_.end()) return entries_[it->second];
        if (d.is_wildcard) {
            if (auto it = by_parent_.find(parent_of(d.full)); it != by_parent_.end()) return entries_[it->second];
        }
    }
    return std::nullopt;
}

std::string_view to_string(Verdict v) { return v == Verdict::confirmed_phish ? "confirmed_phish" : "no_evidence"; }

Verdict verdict_from_string(std::string_view s) {
    if (s == "confirmed_phish") return Verdict::confirmed_phish;
    if (s == "no_evidence") return Verdict::no_evidence;
    throw std::invalid_argument("unknown verdict: " + std::string(s));
}

Verifier::Verifier(const IntelSnapshot& snapshot, VerifyOptions options, ReputationClient* remote)
    : snapshot_(snapshot), options_(options), remote_(remote) {}

Verdict Verifier::verify(const std::vector<std::string>& domains) const {
    std::vector<cert::DomainName> names;
    names.reserve(domains.size());
    for (const auto& d : domains) names.push_back(cert::decompose_domain(d));
    if (snapshot_.match_domains(names)) return Verdict::confirmed_phish;
    const auto& prefixes = snapshot_.prefixes();
    if (!options_.require_full_hash) {
        if (prefix_check(names, prefixes)) return Verdict::confirmed_phish;
    } else {
        for (const auto& n : names) {
            for (const auto& expr : url_expressions(n)) {
                if (prefixes.contains_full_hash(sha256(as_bytes(expr)))) return Verdict::confirmed_phish;
            }
        }
    }
    if (remote_) {
        for (const auto& d : domains) {
            if (remote_->lookup(d).value_or(false)) return Verdict::confirmed_phish;
        }
    }
    return Verdict::no_evidence;
}

// ---------------------------------------------------------------------------

namespace {

struct Stmt {
    sqlite3_stmt* s = nullptr;
    Stmt(sqlite3* db, const char* sql) {
        if (sqlite3_prepare_v2(db, sql, -1, &s, nullptr) != SQLITE_OK) {
            throw StoreError(std::string("prepare: ") + sqlite3_errmsg(db));
        }
    }
    ~Stmt() { sqlite3_finalize(s); }
    Stmt(const Stmt&) = delete;
    Stmt& operator=(const Stmt&) = delete;

    void text(int i, const std::string& v) { sqlite3_bind_text(s, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT); }
    void integer(int i, std::int64_t v) { sqlite3_bind_int64(s, i, v); }
    void blob(int i, const void* p, int n) { sqlite3_bind_blob(s, i, p, n, SQLITE_TRANSIENT); }
    int step() { return sqlite3_step(s); }
    void reset() {
        sqlite3_reset(s);
        sqlite3_clear_bindings(s);
    }
    std::string col_text(int i) const {
        auto p = sqlite3_column_text(s, i);
        return p ? std::string(reinterpret_cast<const char*>(p)) : std::string();
    }
    std::int64_t col_int(int i) const { return sqlite3_column_int64(s, i); }
};

}  // namespace

IntelStore::IntelStore(const std::string& path) {
    if (path != ":memory:") {
        auto parent = std::filesystem::path(path).parent_path();
        if (!parent.empty()) std::filesystem::create_directories(parent);
    }
    if (sqlite3_open(path.c_str(), &db_) != SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
        sqlite3_close(db_);
        throw StoreError("cannot open intel store " + path + ": " + msg);
    }
    sqlite3_busy_timeout(db_, 5000);
    int version = 0;
    {
        Stmt st(db_, "PRAGMA user_version");
        if (st.step() == SQLITE_ROW) version = static_cast<int>(st.col_int(0));
    }
    if (version > k_schema_version) {
        sqlite3_close(db_);
        throw StoreError("intel store " + path + " has newer schema version " + std::to_string(version));
    }
    exec("PRAGMA journal_mode=WAL");
    exec(R"sql(
        CREATE TABLE IF NOT EXISTS entries(
            url TEXT NOT NULL, source TEXT NOT NULL, host TEXT NOT NULL,
            registered_domain TEXT NOT NULL, first_seen INTEGER NOT NULL,
            last_fetched INTEGER NOT NULL, PRIMARY KEY(url, source));
        CREATE INDEX IF NOT EXISTS entries_host ON entries(host);
        CREATE TABLE IF NOT EXISTS prefixes(prefix BLOB PRIMARY KEY, added_at INTEGER NOT NULL);
        CREATE TABLE IF NOT EXISTS full_hashes(hash BLOB PRIMARY KEY);
        CREATE TABLE IF NOT EXISTS fetches(feed TEXT PRIMARY KEY, last_fetch INTEGER NOT NULL);
        PRAGMA user_version = 1;
    )sql");
}

IntelStore::~IntelStore() { sqlite3_close(db_); }

void IntelStore::exec(const char* sql) const {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown";
        sqlite3_free(err);
        throw StoreError("sqlite: " + msg);
    }
}

IngestReport IntelStore::ingest(FeedSource source, std::string_view raw, UtcTime fetched_at) {
    auto parsed = parse_feed(source, raw, fetched_at);
    auto report = add_entries(parsed.entries);
    report.malformed = parsed.malformed;
    return report;
}

IngestReport IntelStore::add_entries(const std::vector<IntelEntry>& entries) {
    std::lock_guard lock(mu_);
    IngestReport report;
    exec("BEGIN IMMEDIATE");
    try {
        Stmt insert(db_,
                    "INSERT OR IGNORE INTO entries(url, source, host, registered_domain, first_seen, last_fetched) "
                    "VALUES(?,?,?,?,?,?)");
        Stmt touch(db_, "UPDATE entries SET last_fetched = max(last_fetched, ?) WHERE url = ? AND source = ?");
        for (const auto& e : entries) {
            std::string src(to_string(e.source));
            insert.text(1, e.url);
            insert.text(2, src);
            insert.text(3, e.host);
            insert.text(4, e.registered_domain);
            insert.integer(5, to_unix_ms(e.first_seen));
            insert.integer(6, to_unix_ms(e.last_fetched));
            if (insert.step() != SQLITE_DONE) throw StoreError(sqlite3_errmsg(db_));
            insert.reset();
            if (sqlite3_changes(db_) == 1) {
                report.new_entries.push_back(e);
                continue;
            }
            ++report.duplicates;
            touch.integer(1, to_unix_ms(e.last_fetched));
            touch.text(2, e.url);
            touch.text(3, src);
            if (touch.step() != SQLITE_DONE) throw StoreError(sqlite3_errmsg(db_));
            touch.reset();
        }
        exec("COMMIT");
    } catch (...) {
        exec("ROLLBACK");
        throw;
    }
    return report;
}

std::size_t IntelStore::add_prefixes(const PrefixSet& prefixes) {
    std::lock_guard lock(mu_);
    std::size_t added = 0;
    exec("BEGIN IMMEDIATE");
    try {
        Stmt insert(db_, "INSERT OR IGNORE INTO prefixes(prefix, added_at) VALUES(?, ?)");
        Stmt full(db_, "INSERT OR IGNORE INTO full_hashes(hash) VALUES(?)");
        for (const auto& p : prefixes.sorted()) {
            insert.blob(1, p.data(), 4);
            insert.integer(2, to_unix_ms(prefixes.snapshot_time));
            if (insert.step() != SQLITE_DONE) throw StoreError(sqlite3_errmsg(db_));
            insert.reset();
            added += static_cast<std::size_t>(sqlite3_changes(db_));
        }
        for (const auto& h : prefixes.full_hashes()) {
            full.blob(1, h.data(), 32);
            if (full.step() != SQLITE_DONE) throw StoreError(sqlite3_errmsg(db_));
            full.reset();
        }
        exec("COMMIT");
    } catch (...) {
        exec("ROLLBACK");
        throw;
    }
    return added;
}

IntelSnapshot IntelStore::snapshot() const {
    std::lock_guard lock(mu_);
    exec("BEGIN");
    std::vector<IntelEntry> entries;
    PrefixSet prefixes;
    try {
        Stmt q(db_,
               "SELECT url, source, host, registered_domain, first_seen, last_fetched FROM entries "
               "ORDER BY first_seen, url, source");
        while (q.step() == SQLITE_ROW) {
            IntelEntry e;
            e.url = q.col_text(0);
            e.source = feed_source_from_string(q.col_text(1));
            e.host = q.col_text(2);
            e.registered_domain = q.col_text(3);
            e.first_seen = from_unix_ms(q.col_int(4));
            e.last_fetched = from_unix_ms(q.col_int(5));
            entries.push_back(std::move(e));
        }
        Stmt p(db_, "SELECT prefix, added_at FROM prefixes");
        while (p.step() == SQLITE_ROW) {
            if (sqlite3_column_bytes(p.s, 0) != 4) continue;
            auto* b = static_cast<const std::uint8_t*>(sqlite3_column_blob(p.s, 0));
            prefixes.insert({b[0], b[1], b[2], b[3]});
            prefixes.snapshot_time = std::max(prefixes.snapshot_time, from_unix_ms(p.col_int(1)));
        }
        Stmt f(db_, "SELECT hash FROM full_hashes");
        while (f.step() == SQLITE_ROW) {
            if (sqlite3_column_bytes(f.s, 0) != 32) continue;
            auto* b = static_cast<const std::uint8_t*>(sqlite3_column_blob(f.s, 0));
            Sha256Digest d;
            std::copy(b, b + 32, d.begin());
            prefixes.insert_full_hash(d);
        }
        exec("COMMIT");
    } catch (...) {
        exec("ROLLBACK");
        throw;
    }
    return IntelSnapshot(std::move(entries), std::move(prefixes));
}

std::size_t IntelStore::entry_count() const {
    std::lock_guard lock(mu_);
    Stmt q(db_, "SELECT COUNT(*) FROM entries");
    q.step();
    return static_cast<std::size_t>(q.col_int(0));
}

std::optional<UtcTime> IntelStore::last_fetch(const std::string& feed) const {
    std::lock_guard lock(mu_);
    Stmt q(db_, "SELECT last_fetch FROM fetches WHERE feed = ?");
    q.text(1, feed);
    if (q.step() != SQLITE_ROW) return std::nullopt;
    return from_unix_ms(q.col_int(0));
}

void IntelStore::set_last_fetch(const std::string& feed, UtcTime t) {
    std::lock_guard lock(mu_);
    Stmt q(db_, "INSERT INTO fetches(feed, last_fetch) VALUES(?, ?) ON CONFLICT(feed) DO UPDATE SET last_fetch = excluded.last_fetch");
    q.text(1, feed);
    q.integer(2, to_unix_ms(t));
    if (q.step() != SQLITE_DONE) throw StoreError(sqlite3_errmsg(db_));
}

}  // namespace ctphish::intel
