#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctphish/classifiers/rng.hpp"
#include "ctphish/fixtures/cert_factory.hpp"

namespace ctphish::fixtures {

struct CorpusOptions {
    std::size_t benign = 10000;
    std::size_t phish = 50;
    std::uint64_t seed = 1;
    std::size_t precert_every = 0;  ///< mark every k-th log entry as a precertificate
};

struct CorpusCert {
    Bytes der;
    bool phish = false;
    bool precert = false;
    std::vector<std::string> domains;
};

/// Synthetic CT stream: benign certificates with planted phishing-style ones
/// at seeded positions. Every planted certificate's CN appears in the feed.
struct Corpus {
    std::vector<CorpusCert> certs;
    std::vector<std::string> phish_urls;

    /// One URL per line, as served by OpenPhish.
    std::string openphish_feed() const;
};

CertSpec benign_spec(classifiers::CounterRng& rng, std::uint64_t serial);
CertSpec phish_spec(classifiers::CounterRng& rng, std::uint64_t serial);

Corpus generate_corpus(const CorpusOptions& options, CertFactory& factory);

/// Writes <dir>/certs.pem, <dir>/feed.txt, <dir>/labels.jsonl and a fixture
/// server spec <dir>/fixture.json serving the corpus as log `log_name`.
void write_corpus(const Corpus& corpus, const std::string& dir, const std::string& log_name,
                  std::size_t precert_every = 0);

}  // namespace ctphish::fixtures
