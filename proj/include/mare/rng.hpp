#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mare {

/// SplitMix64: state advances by a fixed odd increment and each output is a
/// bijective mix of the counter. Portable and bit-reproducible; uniform and
/// normal draws are derived here rather than through <random> distributions,
/// whose algorithms differ between standard libraries.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept
    {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Independent stream seeded from this one.
    SplitMix64 split() noexcept { return SplitMix64(next()); }

    /// Uniform on the open interval (0, 1): top 53 bits, offset by half a step.
    double uniform() noexcept
    {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal by the Box-Muller transform (one draw per call).
    double normal() noexcept
    {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t state_;
};

} // namespace mare
