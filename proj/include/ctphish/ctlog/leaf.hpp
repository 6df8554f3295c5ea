#pragma once

#include <cstdint>
#include <vector>

#include "ctphish/util/bytes.hpp"
#include "ctphish/util/time.hpp"

namespace ctphish::ctlog {

enum class EntryType : std::uint16_t { x509_entry = 0, precert_entry = 1 };

/// MerkleTreeLeaf / TimestampedEntry (v1, timestamped_entry leaf type).
struct MerkleTreeLeaf {
    std::uint64_t timestamp_ms = 0;
    EntryType type = EntryType::x509_entry;
    Bytes certificate;             ///< leaf certificate DER, or TBSCertificate for precerts
    Sha256Digest issuer_key_hash{};  ///< precert only
    Bytes extensions;

    bool operator==(const MerkleTreeLeaf&) const = default;
};

MerkleTreeLeaf decode_leaf(ByteView leaf_input);
Bytes encode_leaf(const MerkleTreeLeaf& leaf);

/// One decoded get-entries item.
struct LogEntry {
    std::uint64_t index = 0;
    Bytes leaf_input;
    Bytes cert_der;   ///< certificate to parse; the precertificate for precert entries
    Bytes tbs;        ///< precert TBSCertificate (empty for x509 entries)
    bool is_precert = false;
    UtcTime timestamp{};
};

/// Decodes leaf_input + extra_data. Throws LeafDecodeError.
LogEntry decode_entry(std::uint64_t index, ByteView leaf_input, ByteView extra_data);

/// extra_data payloads as served by a log.
Bytes encode_x509_extra_data(const std::vector<Bytes>& chain);
Bytes encode_precert_extra_data(ByteView pre_certificate, const std::vector<Bytes>& chain);

/// Wraps a TBSCertificate into a Certificate with an empty signature so that
/// it can be parsed when no precertificate is available.
Bytes wrap_tbs(ByteView tbs);

}  // namespace ctphish::ctlog
