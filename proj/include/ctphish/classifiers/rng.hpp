#pragma once

#include <cstdint>

namespace ctphish::classifiers {

std::uint64_t splitmix64(std::uint64_t x);

/// Counter-based generator: draw i of stream s under seed k is
/// splitmix64(key(k, s) + i * 0x9E3779B97F4A7C15), where
/// key(k, s) = splitmix64(k ^ splitmix64(s)). Streams are independent, so each
/// tree's draws depend only on (seed, tree index).
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next();
    /// Uniform integer in [0, n) by Lemire's multiply-and-reject method.
    std::uint64_t bounded(std::uint64_t n);
    /// Uniform double in [0, 1) from the top 53 bits.
    double uniform();

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace ctphish::classifiers
