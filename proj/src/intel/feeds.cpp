#include "ctphish/intel/feeds.hpp"

#include <unordered_set>

#include "ctphish/cert/domain.hpp"
#include "ctphish/errors.hpp"
#include "ctphish/util/json.hpp"

namespace ctphish::intel {

std::string_view to_string(FeedSource s) {
    switch (s) {
        case FeedSource::phishtank: return "PhishTank";
        case FeedSource::phishstats: return "PhishStats";
        case FeedSource::openphish: return "OpenPhish";
        case FeedSource::custom: break;
    }
    return "custom";
}

FeedSource feed_source_from_string(std::string_view s) {
    std::string lower(s);
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "phishtank") return FeedSource::phishtank;
    if (lower == "phishstats") return FeedSource::phishstats;
    if (lower == "openphish") return FeedSource::openphish;
    if (lower == "custom") return FeedSource::custom;
    throw std::invalid_argument("unknown feed source: " + std::string(s));
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_lines(std::string_view raw) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start < raw.size()) {
        std::size_t end = raw.find('\n', start);
        if (end == std::string_view::npos) end = raw.size();
        out.push_back(raw.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

bool valid_host(std::string_view host) {
    if (host.empty() || host.size() > 253) return false;
    if (cert::is_ip_literal(host)) return true;
    if (host.find('.') == std::string_view::npos) return false;
    if (host.front() == '.' || host.find("..") != std::string_view::npos) return false;
    for (char c : host) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '.' || c == '_' || c == '*';
        if (!ok) return false;
    }
    return true;
}

class Collector {
public:
    Collector(FeedSource source, UtcTime fetched_at) : source_(source), fetched_at_(fetched_at) {}

    void add(std::string_view url, std::optional<UtcTime> first_seen = std::nullopt) {
        auto e = make_entry(url, source_, fetched_at_, first_seen);
        if (!e) {
            ++out_.malformed;
            return;
        }
        if (seen_.insert(e->url).second) out_.entries.push_back(std::move(*e));
    }
    void malformed() { ++out_.malformed; }
    ParsedFeed take() { return std::move(out_); }
    std::size_t accepted() const { return out_.entries.size(); }
    std::size_t malformed_count() const { return out_.malformed; }

private:
    FeedSource source_;
    UtcTime fetched_at_;
    ParsedFeed out_;
    std::unordered_set<std::string> seen_;
};

std::optional<UtcTime> try_time(const Json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string()) return std::nullopt;
    try {
        return parse_rfc3339(j[key].get<std::string>());
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }
}

std::optional<UtcTime> try_time(std::string_view text) {
    try {
        return parse_rfc3339(trim(text));
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }
}

void parse_json_array(std::string_view raw, Collector& c, const char* time_key) {
    Json j = Json::parse(raw);
    if (!j.is_array()) throw UnknownFormat("expected a JSON array");
    for (const auto& item : j) {
        if (!item.is_object() || !item.contains("url") || !item["url"].is_string()) {
            c.malformed();
            continue;
        }
        c.add(item["url"].get<std::string>(), try_time(item, time_key));
    }
}

void parse_text(std::string_view raw, Collector& c) {
    for (auto line : split_lines(raw)) {
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        c.add(line);
    }
}

void parse_phishtank_csv(std::string_view raw, Collector& c) {
    auto lines = split_lines(raw);
    std::size_t i = 0;
    while (i < lines.size() && trim(lines[i]).empty()) ++i;
    if (i == lines.size()) return;
    auto header = split_csv_line(trim(lines[i]));
    auto url_col = std::find(header.begin(), header.end(), "url");
    if (url_col == header.end()) throw UnknownFormat("PhishTank CSV without a url column");
    auto url_idx = static_cast<std::size_t>(url_col - header.begin());
    auto time_col = std::find(header.begin(), header.end(), "submission_time");
    for (++i; i < lines.size(); ++i) {
        auto line = trim(lines[i]);
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() <= url_idx) {
            c.malformed();
            continue;
        }
        std::optional<UtcTime> first_seen;
        if (time_col != header.end()) {
            auto t = static_cast<std::size_t>(time_col - header.begin());
            if (t < fields.size()) first_seen = try_time(fields[t]);
        }
        c.add(fields[url_idx], first_seen);
    }
}

void parse_phishstats_csv(std::string_view raw, Collector& c) {
    for (auto line : split_lines(raw)) {
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        auto fields = split_csv_line(line);
        if (fields.size() < 3) {
            c.malformed();
            continue;
        }
        c.add(fields[2], try_time(fields[0]));
    }
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::optional<std::string> host_of_url(std::string_view url) {
    std::string_view s = trim(url);
    if (auto scheme = s.find("://"); scheme != std::string_view::npos) {
        std::string_view name = s.substr(0, scheme);
        bool ok = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
        });
        if (!ok) return std::nullopt;
        s.remove_prefix(scheme + 3);
    }
    s = s.substr(0, s.find_first_of("/?#"));
    if (auto at = s.rfind('@'); at != std::string_view::npos) s.remove_prefix(at + 1);
    std::string host;
    if (!s.empty() && s.front() == '[') {
        auto close = s.find(']');
        if (close == std::string_view::npos) return std::nullopt;
        host = std::string(s.substr(1, close - 1));
    } else {
        host = std::string(s.substr(0, s.find(':')));
    }
    host = cert::normalize_domain(host);
    if (!valid_host(host)) return std::nullopt;
    return host;
}

std::optional<IntelEntry> make_entry(std::string_view url, FeedSource source, UtcTime fetched_at,
                                     std::optional<UtcTime> first_seen) {
    auto host = host_of_url(url);
    if (!host) return std::nullopt;
    IntelEntry e;
    e.url = std::string(trim(url));
    e.host = *host;
    e.registered_domain = cert::decompose_domain(e.host).registered_domain;
    e.source = source;
    e.first_seen = first_seen.value_or(fetched_at);
    e.last_fetched = fetched_at;
    return e;
}

ParsedFeed parse_feed(FeedSource source, std::string_view raw, UtcTime fetched_at) {
    std::string_view body = trim(raw);
    Collector c(source, fetched_at);
    if (body.empty()) return c.take();
    const bool json = body.front() == '[' || body.front() == '{';
    try {
        switch (source) {
            case FeedSource::openphish:
                if (json || body.front() == '<') throw UnknownFormat("OpenPhish feeds are plain text");
                parse_text(body, c);
                break;
            case FeedSource::phishtank:
                if (json) {
                    parse_json_array(body, c, "submission_time");
                } else {
                    parse_phishtank_csv(body, c);
                }
                break;
            case FeedSource::phishstats:
                if (json) {
                    parse_json_array(body, c, "date");
                } else {
                    parse_phishstats_csv(body, c);
                }
                break;
            case FeedSource::custom:
                if (json) {
                    parse_json_array(body, c, "first_seen");
                } else {
                    parse_text(body, c);
                }
                break;
        }
    } catch (const Json::exception& e) {
        throw UnknownFormat(std::string(to_string(source)) + ": " + e.what());
    }
    if (c.accepted() == 0 && c.malformed_count() > 0) {
        throw UnknownFormat(std::string(to_string(source)) + ": no parsable entries in payload");
    }
    return c.take();
}

}  // namespace ctphish::intel
