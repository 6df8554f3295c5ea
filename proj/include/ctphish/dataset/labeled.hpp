#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ctphish/cert/certificate.hpp"

namespace ctphish::dataset {

enum class Label { benign, phish };

std::string_view to_string(Label l);
Label label_from_string(std::string_view s);

struct LabeledRecord {
    cert::CertificateRecord record;
    Label label = Label::benign;
    std::string provenance;  ///< e.g. "ct:<log>" or "feed:openphish"
};

struct LabeledDataset {
    std::vector<LabeledRecord> records;
    UtcTime created_at{};

    std::size_t count(Label l) const;
    /// Throws std::invalid_argument on duplicate fingerprints.
    void validate() const;
};

/// Hex SHA-256 over the fingerprints and labels, in record order.
std::string dataset_hash(const LabeledDataset& d);

/// JSONL: a header line {"created_at": ...} followed by one record per line.
std::string to_jsonl(const LabeledDataset& d);
LabeledDataset dataset_from_jsonl(std::string_view text);

void save_dataset(const std::string& path, const LabeledDataset& d);
LabeledDataset load_dataset(const std::string& path);

}  // namespace ctphish::dataset
