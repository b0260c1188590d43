#pragma once

// Seeded random number helpers.
//
// Every stochastic piece of the library draws through this wrapper instead of
// the <random> distribution classes, whose output is implementation-defined.
// mt19937_64 itself is pinned by the standard, so a fixed seed reproduces the
// same stream on any platform, which the determinism guarantees rely on.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace seqplan {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; one value per call.
    double gaussian() {
        double u1 = 1.0 - uniform01();  // (0, 1], keeps the log finite
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) { return gen_() % n; }

private:
    std::mt19937_64 gen_;
};

/// In-place Fisher-Yates shuffle driven by Rng::below.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace seqplan
