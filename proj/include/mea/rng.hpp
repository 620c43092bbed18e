#pragma once

// Seeding and random variates.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The variate transforms below are implemented here rather than
// taken from <random>, whose distributions are implementation-defined, so a
// given seed yields the same numbers on every platform. See docs/formats.md.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace mea {

/// FNV-1a 64-bit over raw bytes.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t state = 0xcbf29ce484222325ULL) noexcept;

/// SplitMix64 finaliser (bijective 64-bit mixer).
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Deterministic per-stage seed: mix64(FNV-1a(le64(master) || tag || 0xFF || le64(index))).
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view stage_tag, std::uint64_t index) noexcept;

class rng {
public:
    explicit rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1].
    double uniform_open0() { return 1.0 - uniform01(); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Unbiased integer in [0, n), n > 0.
    std::uint64_t below(std::uint64_t n);

    bool bernoulli(double p) { return uniform01() < p; }

    /// Standard normal via the Marsaglia polar method.
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }

    double exponential(double rate) { return -std::log(uniform_open0()) / rate; }

    /// Fisher-Yates, last index first.
    template <typename T>
    void shuffle(std::vector<T>& v)
    {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mea
