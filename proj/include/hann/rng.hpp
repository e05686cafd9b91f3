#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace hann {

/// Counter-based 64-bit generator. Every output is a pure function of
/// (seed, stream, counter), so independent consumers draw from documented,
/// non-overlapping streams and any sequence can be reproduced from the
/// master seed alone.
///
/// Streams in use across the library:
///   kData     dataset generation (moons, lipschitz, fixtures)
///   kInit     network parameter initialization
///   kDropout  dropout masks (sub-keyed by epoch/batch)
///   kShuffle  minibatch shuffling and split shuffling
///   kSolver   constraint permutations inside the QP solver
///   kMc       Monte Carlo risk estimation
///   kTrial    per-trial / per-run seed derivation in experiments
enum class RngStream : std::uint64_t {
    kData = 1,
    kInit = 2,
    kDropout = 3,
    kShuffle = 4,
    kSolver = 5,
    kMc = 6,
    kTrial = 7,
};

namespace detail {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t mix64(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
}  // namespace detail

/// Derive a child seed; used to split one master seed into independent
/// per-run / per-trial seeds.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return detail::mix64(detail::mix64(seed) ^ detail::mix64(tag + 0x51ED2701u));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag1, std::uint64_t tag2) {
    return derive_seed(derive_seed(seed, tag1), tag2);
}

class CounterRng {
  public:
    CounterRng(std::uint64_t seed, RngStream stream, std::uint64_t counter_start = 0)
        : key_(detail::mix64(detail::mix64(seed) ^
                             (static_cast<std::uint64_t>(stream) * detail::kGolden))),
          counter_(counter_start) {}

    std::uint64_t next_u64() { return detail::mix64(key_ + (counter_++) * detail::kGolden); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Integer in [0, n), n > 0.
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    /// Standard normal via Box-Muller; consumes two uniforms per draw.
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Fisher-Yates shuffle.
    template <typename Container>
    void shuffle(Container& c) {
        for (std::size_t i = c.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(c[i - 1], c[j]);
        }
    }

  private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

}  // namespace hann
