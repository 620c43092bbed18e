#include "mea/rng.hpp"

#include <array>
#include <cmath>

namespace mea {

namespace {

std::array<unsigned char, 8> le64(std::uint64_t v) noexcept
{
    std::array<unsigned char, 8> out{};
    for (int i = 0; i < 8; ++i) out[static_cast<std::size_t>(i)] = static_cast<unsigned char>(v >> (8 * i));
    return out;
}

}  // namespace

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t state) noexcept
{
    for (unsigned char b : bytes) {
        state ^= b;
        state *= 0x100000001b3ULL;
    }
    return state;
}

std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view stage_tag, std::uint64_t index) noexcept
{
    const auto m = le64(master_seed);
    const auto i = le64(index);
    const unsigned char sep = 0xFF;
    auto h = fnv1a64(m);
    h = fnv1a64({reinterpret_cast<const unsigned char*>(stage_tag.data()), stage_tag.size()}, h);
    h = fnv1a64({&sep, 1}, h);
    h = fnv1a64(i, h);
    return mix64(h);
}

std::uint64_t rng::below(std::uint64_t n)
{
    // Reject the short final bucket so every residue is equally likely.
    const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % n + 1) % n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x > limit);
    return x % n;
}

double rng::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform01() - 1.0;
        v = 2.0 * uniform01() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_normal_ = v * f;
    has_spare_ = true;
    return u * f;
}

}  // namespace mea
