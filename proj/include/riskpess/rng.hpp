#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace riskpess {

/// Counter-based uniform generator: every draw is a pure function of
/// (seed, trial, row, stage), so results do not depend on scheduling.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        // splitmix64 finalizer
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t bits(std::uint64_t trial, std::uint64_t row, std::uint64_t stage) const noexcept {
        std::uint64_t h = mix(seed_);
        h = mix(h ^ trial);
        h = mix(h ^ row);
        return mix(h ^ stage);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform(std::uint64_t trial, std::uint64_t row, std::uint64_t stage) const noexcept {
        return static_cast<double>(bits(trial, row, stage) >> 11) * 0x1.0p-53;
    }

    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
};

/// Inverse-CDF draw from a probability vector. Entries with probability
/// exactly zero are never returned.
inline std::size_t sample_categorical(const std::vector<double>& probs, double u) {
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        if (probs[j] <= 0.0) continue;
        acc += probs[j];
        last_positive = j;
        if (u < acc) return j;
    }
    return last_positive;
}

} // namespace riskpess
