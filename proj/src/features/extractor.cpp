#include "ctphish/features/extractor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "ctphish/data.hpp"
#include "ctphish/errors.hpp"
#include "ctphish/features/lexical.hpp"

namespace ctphish::features {

// ---------------------------------------------------------------------------
// resources

PopularRanks PopularRanks::parse(std::string_view text) {
    std::unordered_map<std::string, int> ranks;
    int next = 1;
    for (const auto& line : data::lines(text)) {
        std::string domain = line;
        int rank = next;
        if (auto comma = line.find(','); comma != std::string::npos) {
            try {
                rank = std::stoi(line.substr(0, comma));
            } catch (const std::exception&) {
                throw std::invalid_argument("bad rank line: " + line);
            }
            domain = line.substr(comma + 1);
        }
        domain = cert::normalize_domain(domain);
        ranks.try_emplace(domain, rank);
        next = std::max(next, rank + 1);
    }
    return PopularRanks(std::move(ranks));
}

const PopularRanks& PopularRanks::bundled() {
    static const PopularRanks p = parse(data::load("popular_domains.txt"));
    return p;
}

std::optional<int> PopularRanks::rank(const std::string& registered_domain) const {
    auto it = ranks_.find(registered_domain);
    if (it == ranks_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> PopularRanks::domains() const {
    std::vector<std::string> out;
    for (const auto& [d, _] : ranks_) out.push_back(d);
    std::sort(out.begin(), out.end());
    return out;
}

const Resources& Resources::bundled() {
    static const Resources r = [] {
        Resources res;
        res.keywords = features::keywords();
        for (const auto& oid : data::lines(data::load("ev_oids.txt"))) res.ev_oids.insert(oid);
        res.popular = PopularRanks::bundled();
        return res;
    }();
    return r;
}

ValidationLevel validation_level(const cert::CertificateRecord& r, const std::unordered_set<std::string>& ev_oids) {
    for (const auto& oid : r.policy_oids) {
        if (ev_oids.contains(oid)) return ValidationLevel::ev;
    }
    return r.subject_attrs.contains(cert::SubjectAttr::O) ? ValidationLevel::ov : ValidationLevel::dv;
}

// ---------------------------------------------------------------------------
// codec

std::string CategoricalCodec::issuer_key(const std::string& issuer_dn) {
    auto attr = [&](std::string_view key) -> std::string {
        std::string needle = std::string(key) + "=";
        std::size_t pos = 0;
        while ((pos = issuer_dn.find(needle, pos)) != std::string::npos) {
            if (pos == 0 || issuer_dn.compare(pos - 2, 2, ", ") == 0) {
                auto start = pos + needle.size();
                auto end = issuer_dn.find(", ", start);
                return issuer_dn.substr(start, end == std::string::npos ? std::string::npos : end - start);
            }
            pos += needle.size();
        }
        return {};
    };
    if (auto o = attr("O"); !o.empty()) return o;
    if (auto cn = attr("CN"); !cn.empty()) return cn;
    return issuer_dn;
}

void CategoricalCodec::observe(const cert::CertificateRecord& r) {
    if (frozen_) throw std::logic_error("codec is frozen");
    ++issuer_counts_[issuer_key(r.issuer_dn)];
    ++key_counts_[std::string(cert::to_string(r.key_algorithm))];
}

namespace {

std::map<std::string, int> rank_codes(const std::map<std::string, std::size_t>& counts) {
    std::vector<std::pair<std::string, std::size_t>> v(counts.begin(), counts.end());
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::map<std::string, int> codes;
    int code = 1;
    for (const auto& [name, _] : v) codes[name] = code++;
    return codes;
}

}  // namespace

void CategoricalCodec::freeze() {
    issuer_codes_ = rank_codes(issuer_counts_);
    key_codes_ = rank_codes(key_counts_);
    frozen_ = true;
}

int CategoricalCodec::issuer_code(const cert::CertificateRecord& r) const {
    auto it = issuer_codes_.find(issuer_key(r.issuer_dn));
    return it == issuer_codes_.end() ? k_unseen : it->second;
}

int CategoricalCodec::key_algorithm_code(cert::KeyAlgorithm a) const {
    auto it = key_codes_.find(std::string(cert::to_string(a)));
    return it == key_codes_.end() ? k_unseen : it->second;
}

Json CategoricalCodec::to_json() const { return Json{{"issuer", issuer_codes_}, {"key_algorithm", key_codes_}}; }

CategoricalCodec CategoricalCodec::from_json(const Json& j) {
    CategoricalCodec c;
    c.issuer_codes_ = j.at("issuer").get<std::map<std::string, int>>();
    c.key_codes_ = j.at("key_algorithm").get<std::map<std::string, int>>();
    c.frozen_ = true;
    return c;
}

CategoricalCodec CategoricalCodec::fit(std::span<const cert::CertificateRecord> records) {
    CategoricalCodec c;
    for (const auto& r : records) c.observe(r);
    c.freeze();
    return c;
}

// ---------------------------------------------------------------------------
// extraction

namespace {

constexpr std::string_view k_legacy_gtlds[] = {"com",  "net",  "org",    "edu",  "gov",  "mil",
                                               "int",  "arpa", "biz",    "info", "name", "pro",
                                               "aero", "coop", "museum", "mobi", "asia", "tel",
                                               "travel", "jobs", "cat",  "post", "xxx"};

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }
bool is_letter(char c) { return c >= 'a' && c <= 'z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_hex(char c) { return is_digit(c) || (c >= 'a' && c <= 'f'); }

double ratio(double num, std::size_t den) { return den == 0 ? 0.0 : num / static_cast<double>(den); }

std::vector<std::string_view> tokens_of(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == '.' || s[i] == '-' || s[i] == '_') {
            if (i > start) out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

// Characters belonging to runs of length >= 2 of characters satisfying pred.
template <class Pred>
std::size_t run_chars(std::string_view s, Pred pred) {
    std::size_t total = 0, run = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i < s.size() && pred(s[i])) {
            ++run;
            continue;
        }
        if (run >= 2) total += run;
        run = 0;
    }
    return total;
}

std::string first_label(const cert::DomainName& d) {
    for (const auto& l : d.labels) {
        if (l != "*") return l;
    }
    return {};
}

double value_entropy(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    std::map<double, std::size_t> hist;
    for (double v : values) ++hist[v];
    double h = 0.0, n = static_cast<double>(values.size());
    for (const auto& [_, c] : hist) {
        double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

}  // namespace

CertFeatures extract_cert_features(const cert::CertificateRecord& r, const CategoricalCodec& codec,
                                   const Resources& res) {
    using cert::SubjectAttr;
    CertFeatures f{};
    auto level = validation_level(r, res.ev_oids);
    f[0] = level == ValidationLevel::ov;
    f[1] = level == ValidationLevel::ev;
    f[2] = level == ValidationLevel::dv;
    f[3] = r.subject_attrs.contains(SubjectAttr::C);
    f[4] = r.subject_attrs.contains(SubjectAttr::ST);
    f[5] = r.subject_attrs.contains(SubjectAttr::L);
    f[6] = r.subject_attrs == cert::SubjectAttrSet{SubjectAttr::CN} && r.subject_dn_count == 1;
    f[7] = r.subject_attrs.contains(SubjectAttr::CN);
    f[8] = r.subject_dn_count;
    f[9] = r.subject_char_count;
    f[10] = r.extension_count;
    f[11] = static_cast<double>(r.valid_period_days());
    f[12] = static_cast<double>(r.policy_oids.size());
    bool wildcard = false;
    for (const auto& d : r.domains()) wildcard |= d.starts_with("*.");
    f[13] = wildcard;
    f[14] = r.has_ocsp;
    f[15] = r.has_cdp;
    f[16] = static_cast<double>(r.sans.size());
    std::size_t labels = 0;
    std::set<std::string> suffixes;
    for (const auto& san : r.sans) {
        auto d = cert::decompose_domain(san);
        labels += d.labels.size();
        suffixes.insert(d.public_suffix);
    }
    f[17] = ratio(static_cast<double>(labels), r.sans.size());
    f[18] = static_cast<double>(suffixes.size());
    f[19] = codec.key_algorithm_code(r.key_algorithm);
    f[20] = r.key_size_bits;
    f[21] = codec.issuer_code(r);
    return f;
}

DomainFeatures extract_domain_features(const cert::DomainName& d, const cert::DomainName& cn,
                                       std::span<const cert::DomainName> sans, const PopularRanks& popular) {
    DomainFeatures f{};
    const std::string& full = d.full;
    const std::string& core = d.core;
    const auto host = d.host_labels();
    const auto tokens = tokens_of(full);

    f[0] = shannon_entropy(first_label(cn));
    f[1] = cn.public_suffix == "com";
    {
        std::vector<double> dists;
        for (const auto& s : sans) {
            std::size_t longest = std::max(cn.core.size(), s.core.size());
            dists.push_back(ratio(static_cast<double>(levenshtein(cn.core, s.core)), longest));
        }
        f[2] = value_entropy(dists);
    }
    f[3] = d.had_uppercase;
    f[4] = static_cast<double>(std::count(full.begin(), full.end(), '-'));
    f[5] = static_cast<double>(std::count(d.registered_domain.begin(), d.registered_domain.end(), '-'));
    f[6] = static_cast<double>(tokens.size());
    {
        bool hit = false;
        const std::string name = d.name_without_suffix();
        for (auto tok : tokens_of(name)) {
            for (auto tld : k_legacy_gtlds) hit |= tok.find(tld) != std::string_view::npos;
        }
        f[7] = hit;
    }
    f[8] = full.find("https") != std::string::npos;
    {
        std::size_t longest = 0;
        for (auto t : tokens) longest = std::max(longest, t.size());
        f[9] = static_cast<double>(longest);
    }
    {
        auto special = std::count_if(full.begin(), full.end(), [](char c) { return !is_letter(c) && !is_digit(c); });
        f[10] = ratio(static_cast<double>(special), full.size());
    }
    f[11] = d.is_ip;
    f[12] = d.is_idn;
    {
        double sum = 0;
        for (const auto& s : sans) {
            if (!popular.contains(s.registered_domain)) sum += shannon_entropy(s.core);
        }
        f[13] = sans.empty() ? 0.0 : sum / static_cast<double>(sans.size());
    }
    {
        auto letters = std::count_if(core.begin(), core.end(), is_letter);
        auto vowels = std::count_if(core.begin(), core.end(), is_vowel);
        f[14] = ratio(static_cast<double>(vowels), static_cast<std::size_t>(letters));
        f[15] = ratio(static_cast<double>(std::count_if(core.begin(), core.end(), is_digit)), core.size());
    }
    f[16] = static_cast<double>(full.size());
    f[17] = full.find("www.") != std::string::npos;
    {
        bool only_digits = false, one_char = false, repeated = false;
        std::size_t total_len = 0, hex_parts = 0;
        std::set<std::string> seen;
        for (const auto& l : host) {
            only_digits |= !l.empty() && std::all_of(l.begin(), l.end(), is_digit);
            one_char |= l.size() == 1;
            repeated |= !seen.insert(l).second;
            total_len += l.size();
            hex_parts += !l.empty() && std::all_of(l.begin(), l.end(), is_hex);
        }
        f[18] = only_digits;
        f[19] = ratio(static_cast<double>(total_len), host.size());
        f[20] = static_cast<double>(host.size());
        f[23] = one_char;
        f[24] = repeated;
        f[29] = ratio(static_cast<double>(hex_parts), host.size());
    }
    f[21] = std::any_of(full.begin(), full.end(), is_digit);
    f[22] = d.has_valid_tld;
    {
        std::array<std::size_t, 256> counts{};
        for (unsigned char c : core) ++counts[c];
        std::size_t distinct = 0, repeated = 0;
        for (auto c : counts) {
            distinct += c > 0;
            repeated += c > 1;
        }
        f[25] = ratio(static_cast<double>(distinct), core.size());
        f[27] = static_cast<double>(distinct);
        f[31] = ratio(static_cast<double>(repeated), distinct);
    }
    {
        bool infix = false;
        for (auto tld : k_legacy_gtlds) {
            for (auto pos = core.find(tld, 1); pos != std::string::npos; pos = core.find(tld, pos + 1)) {
                if (pos + tld.size() < core.size()) {
                    infix = true;
                    break;
                }
            }
        }
        f[26] = infix;
    }
    f[28] = shannon_entropy(core);
    f[30] = ratio(static_cast<double>(std::count(full.begin(), full.end(), '_')), full.size());
    f[32] = ratio(static_cast<double>(run_chars(core, [](char c) { return is_letter(c) && !is_vowel(c); })),
                  core.size());
    f[33] = ratio(static_cast<double>(run_chars(core, is_digit)), core.size());
    for (std::size_t n = 1; n <= 3; ++n) {
        auto st = ngram_stats(core, n);
        std::size_t base = 34 + (n - 1) * 7;
        f[base + 0] = st.std;
        f[base + 1] = st.median;
        f[base + 2] = st.mean;
        f[base + 3] = st.min;
        f[base + 4] = st.max;
        f[base + 5] = st.bottom_quartile;
        f[base + 6] = st.top_quartile;
    }
    return f;
}

KeywordFeatures extract_keyword_features(const cert::DomainName& d, const std::vector<std::string>& kws) {
    if (kws.size() != k_keyword_count) throw DimensionMismatch("keyword list must have 47 entries");
    KeywordFeatures f{};
    std::string name = d.is_ip ? d.full : d.name_without_suffix();
    for (char& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::size_t count = 0;
    for (std::size_t i = 0; i < kws.size(); ++i) {
        bool hit = name.find(kws[i]) != std::string::npos;
        f[i] = hit;
        count += hit;
    }
    f[k_keyword_count] = count > 0;
    f[k_keyword_count + 1] = static_cast<double>(count);
    return f;
}

FeatureVector project(const FeatureVector& all, FeatureSet target) {
    if (all.feature_set != FeatureSet::all) {
        if (target == all.feature_set) return all;
        throw DimensionMismatch("cannot project a selected vector");
    }
    if (all.values.size() != k_all_features) throw DimensionMismatch("expected 126 values");
    if (target == FeatureSet::all) return all;
    FeatureVector out;
    out.feature_set = target;
    out.fingerprint = all.fingerprint;
    out.domain_index = all.domain_index;
    for (auto i : selected_indices()) out.values.push_back(all.values[i]);
    return out;
}

FeatureVector average_vectors(std::span<const FeatureVector> per_domain) {
    if (per_domain.empty()) throw EmptyInput("average_vectors needs at least one vector");
    const auto& first = per_domain.front();
    FeatureVector out;
    out.feature_set = first.feature_set;
    out.fingerprint = first.fingerprint;
    out.values.assign(first.values.size(), 0.0);
    for (const auto& v : per_domain) {
        if (v.feature_set != first.feature_set || v.values.size() != first.values.size()) {
            throw DimensionMismatch("average_vectors inputs differ in feature set");
        }
        if (v.fingerprint != first.fingerprint) throw std::invalid_argument("average_vectors inputs differ in certificate");
    }
    // Sum in a canonical order so the result does not depend on input order.
    const std::size_t n = per_domain.size();
    std::vector<double> column(n);
    for (std::size_t j = 0; j < out.values.size(); ++j) {
        for (std::size_t i = 0; i < n; ++i) column[i] = per_domain[i].values[j];
        std::sort(column.begin(), column.end());
        double sum = 0.0;
        for (double x : column) sum += x;
        out.values[j] = sum / static_cast<double>(n);
        if (column.front() == column.back()) out.values[j] = column.front();
    }
    return out;
}

FeatureExtractor::FeatureExtractor(CategoricalCodec codec, const Resources& res)
    : codec_(std::move(codec)), res_(&res) {}

std::vector<FeatureVector> FeatureExtractor::per_domain(const cert::CertificateRecord& r, FeatureSet set) const {
    auto cert_f = extract_cert_features(r, codec_, *res_);
    std::vector<cert::DomainName> sans;
    sans.reserve(r.sans.size());
    for (const auto& s : r.sans) sans.push_back(cert::decompose_domain(s));

    auto names = r.domains();
    if (names.empty()) names.push_back("");
    std::vector<cert::DomainName> domains;
    domains.reserve(names.size());
    for (const auto& n : names) {
        auto it = std::find(r.sans.begin(), r.sans.end(), n);
        domains.push_back(it != r.sans.end() ? sans[static_cast<std::size_t>(it - r.sans.begin())]
                                             : cert::decompose_domain(n));
    }
    const cert::DomainName& cn = domains.front();

    std::vector<FeatureVector> out;
    out.reserve(domains.size());
    for (std::size_t i = 0; i < domains.size(); ++i) {
        auto dom = extract_domain_features(domains[i], cn, sans, res_->popular);
        auto kw = extract_keyword_features(domains[i], res_->keywords);
        FeatureVector v;
        v.fingerprint = r.fingerprint;
        v.domain_index = i;
        v.values.reserve(k_all_features);
        v.values.insert(v.values.end(), cert_f.begin(), cert_f.end());
        v.values.insert(v.values.end(), dom.begin(), dom.end());
        v.values.insert(v.values.end(), kw.begin(), kw.end());
        out.push_back(project(v, set));
    }
    return out;
}

FeatureVector FeatureExtractor::cert_vector(const cert::CertificateRecord& r, FeatureSet set) const {
    auto vectors = per_domain(r, set);
    return average_vectors(vectors);
}

std::string to_csv(std::span<const FeatureVector> rows, const std::vector<std::string>* labels) {
    std::string out = "fingerprint,domain_index";
    FeatureSet set = rows.empty() ? FeatureSet::all : rows.front().feature_set;
    const auto& names = feature_names();
    for (auto i : indices_of(set)) out += "," + names[i];
    if (labels) out += ",label";
    out += "\n";
    char buf[32];
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& v = rows[r];
        out += to_hex(v.fingerprint);
        out += ",";
        out += v.domain_index ? std::to_string(*v.domain_index) : "cert";
        for (double x : v.values) {
            std::snprintf(buf, sizeof buf, ",%.17g", x);
            out += buf;
        }
        if (labels) out += "," + (*labels)[r];
        out += "\n";
    }
    return out;
}

}  // namespace ctphish::features
