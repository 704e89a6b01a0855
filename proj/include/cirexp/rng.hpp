#pragma once

// Counter-derived random streams. A stream is a pure function of
// (seed, path index, lane), so Monte Carlo results never depend on how paths
// are scheduled across workers.

#include <cstdint>
#include <limits>
#include <random>

namespace cirexp {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += kGoldenGamma;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Uniform random bit generator: SplitMix64 keyed by hash(seed, path, lane).
/// Draw i of a stream is splitmix64(key + i * golden), i.e. counter-based.
class PathStream {
public:
    using result_type = std::uint64_t;

    constexpr PathStream(std::uint64_t seed, std::uint64_t path, std::uint64_t lane = 0) noexcept
        : state_(key(seed, path, lane))
    {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept
    {
        const std::uint64_t out = splitmix64(state_);
        state_ += kGoldenGamma;
        return out;
    }

    static constexpr std::uint64_t key(std::uint64_t seed, std::uint64_t path, std::uint64_t lane) noexcept
    {
        std::uint64_t h = splitmix64(seed);
        h = splitmix64(h ^ path);
        return splitmix64(h ^ ((lane + 1) * kGoldenGamma));
    }

private:
    std::uint64_t state_;
};

/// Standard normals along one path. `sign = -1` gives the antithetic twin.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t path, std::uint64_t lane = 0, double sign = 1.0)
        : bits_(seed, path, lane), sign_(sign)
    {}

    double operator()() { return sign_ * normal_(bits_); }

    PathStream& bits() noexcept { return bits_; }

private:
    PathStream bits_;
    std::normal_distribution<double> normal_;
    double sign_;
};

} // namespace cirexp
