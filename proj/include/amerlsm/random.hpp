#pragma once

// Counter-based random numbers.
//
// Every variate is a pure function of (seed, stream, counter): the 64-bit
// word is splitmix64(key + counter * golden) with
// key = splitmix64(seed ^ splitmix64(stream + c)). This makes
// simulations reproducible independently of evaluation order or worker
// count, and lets any single draw be regenerated without replaying a
// sequential engine.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace amerlsm::rng {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Stream of uniforms keyed by (seed, stream).
class CounterStream {
public:
    constexpr CounterStream(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_(splitmix64(seed ^ splitmix64(stream + 0xD1B54A32D192ED03ULL))) {}

    constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
        return splitmix64(key_ + counter * 0x9E3779B97F4A7C15ULL);
    }

    /// Uniform on the open interval (0, 1).
    constexpr double uniform(std::uint64_t counter) const noexcept {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    std::uint64_t key_;
};

/// Box-Muller: two independent standard normals from two uniforms in (0, 1).
inline void box_muller(double u1, double u2, double& n1, double& n2) noexcept {
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    n1 = radius * std::cos(angle);
    n2 = radius * std::sin(angle);
}

/// Poisson variate with the given mean by CDF inversion of u. Monotone in
/// both u and mean, so a fixed u gives common random numbers across means.
inline int poisson_inverse(double u, double mean) noexcept {
    if (mean <= 0.0) {
        return 0;
    }
    double term = std::exp(-mean);
    double cdf = term;
    int k = 0;
    while (u > cdf && k < 10000) {
        ++k;
        term *= mean / k;
        cdf += term;
        if (term == 0.0 && cdf < u) {
            break;
        }
    }
    return k;
}

}  // namespace amerlsm::rng
