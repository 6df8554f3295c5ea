#include "ctphish/dataset/labeled.hpp"

#include <set>
#include <stdexcept>

#include "ctphish/data.hpp"
#include "ctphish/util/json.hpp"

namespace ctphish::dataset {

std::string_view to_string(Label l) { return l == Label::phish ? "phish" : "benign"; }

Label label_from_string(std::string_view s) {
    if (s == "phish" || s == "phishing" || s == "malicious") return Label::phish;
    if (s == "benign") return Label::benign;
    throw std::invalid_argument("unknown label: " + std::string(s));
}

std::size_t LabeledDataset::count(Label l) const {
    std::size_t n = 0;
    for (const auto& r : records) n += r.label == l;
    return n;
}

void LabeledDataset::validate() const {
    std::set<Sha256Digest> seen;
    for (const auto& r : records) {
        if (!seen.insert(r.record.fingerprint).second) {
            throw std::invalid_argument("duplicate fingerprint " + to_hex(r.record.fingerprint));
        }
    }
}

std::string dataset_hash(const LabeledDataset& d) {
    Bytes buf;
    buf.reserve(d.records.size() * 33);
    for (const auto& r : d.records) {
        buf.insert(buf.end(), r.record.fingerprint.begin(), r.record.fingerprint.end());
        buf.push_back(r.label == Label::phish ? 1 : 0);
    }
    return to_hex(sha256(buf));
}

std::string to_jsonl(const LabeledDataset& d) {
    std::string out = Json{{"created_at", format_rfc3339(d.created_at)}, {"count", d.records.size()}}.dump();
    out += "\n";
    for (const auto& r : d.records) {
        Json j{{"record", r.record}, {"label", to_string(r.label)}, {"provenance", r.provenance}};
        out += j.dump();
        out += "\n";
    }
    return out;
}

LabeledDataset dataset_from_jsonl(std::string_view text) {
    LabeledDataset d;
    std::size_t pos = 0;
    bool header = true;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::exception& e) {
            throw std::invalid_argument("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
        if (header && j.contains("created_at") && !j.contains("record")) {
            d.created_at = parse_rfc3339(j.at("created_at").get<std::string>());
            header = false;
            continue;
        }
        header = false;
        LabeledRecord r;
        r.record = j.at("record").get<cert::CertificateRecord>();
        r.label = label_from_string(j.at("label").get<std::string>());
        r.provenance = j.value("provenance", "");
        d.records.push_back(std::move(r));
    }
    return d;
}

void save_dataset(const std::string& path, const LabeledDataset& d) { data::write_file_atomic(path, to_jsonl(d)); }

LabeledDataset load_dataset(const std::string& path) { return dataset_from_jsonl(data::read_file(path)); }

}  // namespace ctphish::dataset
