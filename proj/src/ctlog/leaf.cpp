#include "ctphish/ctlog/leaf.hpp"

#include "ctphish/errors.hpp"

namespace ctphish::ctlog {

namespace {

class Reader {
public:
    explicit Reader(ByteView data) : data_(data) {}

    std::uint64_t uint(std::size_t width) {
        need(width);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < width; ++i) v = (v << 8) | data_[pos_++];
        return v;
    }

    Bytes opaque(std::size_t length_width) {
        auto n = static_cast<std::size_t>(uint(length_width));
        return fixed(n);
    }

    Bytes fixed(std::size_t n) {
        need(n);
        Bytes out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return out;
    }

    bool done() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) throw LeafDecodeError("truncated TLS structure");
    }

    ByteView data_;
    std::size_t pos_ = 0;
};

void put_uint(Bytes& out, std::uint64_t v, std::size_t width) {
    for (std::size_t i = width; i-- > 0;) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_opaque(Bytes& out, ByteView body, std::size_t length_width) {
    put_uint(out, body.size(), length_width);
    out.insert(out.end(), body.begin(), body.end());
}

// DER TLV header at `pos`: returns header length and sets content length.
std::size_t der_header(ByteView der, std::size_t pos, std::size_t& length) {
    if (pos + 2 > der.size()) throw LeafDecodeError("truncated DER");
    std::uint8_t first = der[pos + 1];
    if (first < 0x80) {
        length = first;
        return 2;
    }
    std::size_t n = first & 0x7F;
    if (n == 0 || n > 4 || pos + 2 + n > der.size()) throw LeafDecodeError("bad DER length");
    length = 0;
    for (std::size_t i = 0; i < n; ++i) length = (length << 8) | der[pos + 2 + i];
    return 2 + n;
}

void der_length(Bytes& out, std::size_t n) {
    if (n < 0x80) {
        out.push_back(static_cast<std::uint8_t>(n));
        return;
    }
    Bytes tmp;
    while (n) {
        tmp.insert(tmp.begin(), static_cast<std::uint8_t>(n & 0xFF));
        n >>= 8;
    }
    out.push_back(static_cast<std::uint8_t>(0x80 | tmp.size()));
    out.insert(out.end(), tmp.begin(), tmp.end());
}

}  // namespace

MerkleTreeLeaf decode_leaf(ByteView leaf_input) {
    Reader r(leaf_input);
    if (r.uint(1) != 0) throw LeafDecodeError("unsupported leaf version");
    if (r.uint(1) != 0) throw LeafDecodeError("unsupported leaf type");
    MerkleTreeLeaf leaf;
    leaf.timestamp_ms = r.uint(8);
    auto type = r.uint(2);
    if (type == 0) {
        leaf.type = EntryType::x509_entry;
        leaf.certificate = r.opaque(3);
    } else if (type == 1) {
        leaf.type = EntryType::precert_entry;
        auto hash = r.fixed(32);
        std::copy(hash.begin(), hash.end(), leaf.issuer_key_hash.begin());
        leaf.certificate = r.opaque(3);
    } else {
        throw LeafDecodeError("unknown entry type " + std::to_string(type));
    }
    leaf.extensions = r.opaque(2);
    if (!r.done()) throw LeafDecodeError("trailing bytes after leaf");
    if (leaf.certificate.empty()) throw LeafDecodeError("empty certificate");
    return leaf;
}

Bytes encode_leaf(const MerkleTreeLeaf& leaf) {
    Bytes out;
    out.push_back(0);
    out.push_back(0);
    put_uint(out, leaf.timestamp_ms, 8);
    put_uint(out, static_cast<std::uint16_t>(leaf.type), 2);
    if (leaf.type == EntryType::precert_entry) {
        out.insert(out.end(), leaf.issuer_key_hash.begin(), leaf.issuer_key_hash.end());
    }
    put_opaque(out, leaf.certificate, 3);
    put_opaque(out, leaf.extensions, 2);
    return out;
}

LogEntry decode_entry(std::uint64_t index, ByteView leaf_input, ByteView extra_data) {
    auto leaf = decode_leaf(leaf_input);
    LogEntry e;
    e.index = index;
    e.leaf_input.assign(leaf_input.begin(), leaf_input.end());
    e.timestamp = from_unix_ms(static_cast<std::int64_t>(leaf.timestamp_ms));
    if (leaf.type == EntryType::x509_entry) {
        e.cert_der = std::move(leaf.certificate);
        return e;
    }
    e.is_precert = true;
    e.tbs = std::move(leaf.certificate);
    if (!extra_data.empty()) {
        Reader r(extra_data);
        e.cert_der = r.opaque(3);
    }
    if (e.cert_der.empty()) e.cert_der = wrap_tbs(e.tbs);
    return e;
}

Bytes encode_x509_extra_data(const std::vector<Bytes>& chain) {
    Bytes body;
    for (const auto& c : chain) put_opaque(body, c, 3);
    Bytes out;
    put_opaque(out, body, 3);
    return out;
}

Bytes encode_precert_extra_data(ByteView pre_certificate, const std::vector<Bytes>& chain) {
    Bytes out;
    put_opaque(out, pre_certificate, 3);
    Bytes tail = encode_x509_extra_data(chain);
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
}

Bytes wrap_tbs(ByteView tbs) {
    // TBSCertificate ::= SEQUENCE { [0] version, serial, signature AlgorithmIdentifier, ... }
    std::size_t len = 0;
    if (tbs.empty() || tbs[0] != 0x30) throw LeafDecodeError("TBS is not a SEQUENCE");
    std::size_t pos = der_header(tbs, 0, len);
    if (pos < tbs.size() && tbs[pos] == 0xA0) {
        std::size_t h = der_header(tbs, pos, len);
        pos += h + len;
    }
    std::size_t h = der_header(tbs, pos, len);  // serialNumber
    pos += h + len;
    if (pos >= tbs.size() || tbs[pos] != 0x30) throw LeafDecodeError("missing signature algorithm");
    h = der_header(tbs, pos, len);
    if (pos + h + len > tbs.size()) throw LeafDecodeError("truncated signature algorithm");
    ByteView alg = tbs.subspan(pos, h + len);

    Bytes body(tbs.begin(), tbs.end());
    body.insert(body.end(), alg.begin(), alg.end());
    body.insert(body.end(), {0x03, 0x01, 0x00});
    Bytes out{0x30};
    der_length(out, body.size());
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

}  // namespace ctphish::ctlog
