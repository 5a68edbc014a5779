#ifndef SPLINK_RNG_HPP
#define SPLINK_RNG_HPP

#include <cmath>
#include <cstdint>

#include "splink/constants.hpp"

namespace splink {

/// Counter-based generator built on the splitmix64 finalizer:
///
///   key       = mix(seed ^ mix(stream ^ 0x7F4A7C15F39CC060))
///   output(i) = mix(key ^ mix(i))
///
/// The generator is a pure function of (seed, stream, counter), so a
/// sub-stream indexed by (seed, stream) reproduces the same values no
/// matter what order streams are consumed in. That is what makes
/// arc-parallel and sequential simulation produce identical output.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(seed ^ mix(stream ^ 0x7F4A7C15F39CC060ULL))) {}

    std::uint64_t next_u64() { return mix(key_ ^ mix(counter_++)); }

    /// Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1]; safe as a log() argument.
    double next_double_open() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Standard normal via Box-Muller. Uses two uniforms per value and
    /// discards the sibling, keeping the draw count per call fixed.
    double gaussian() {
        const double u1 = next_double_open();
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    /// Poisson deviate. Knuth's product method below lambda = 30;
    /// larger means are split into independent chunks so exp(-lambda)
    /// never underflows.
    long long poisson(double lambda) {
        long long n = 0;
        while (lambda > 30.0) {
            n += poisson_knuth(30.0);
            lambda -= 30.0;
        }
        if (lambda > 0.0) n += poisson_knuth(lambda);
        return n;
    }

private:
    long long poisson_knuth(double lambda) {
        const double limit = std::exp(-lambda);
        long long k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= next_double_open();
        } while (p > limit);
        return k - 1;
    }

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Fixed stream ids used to derive per-module sub-generators from one
/// master seed. Never reuse an id for a new purpose.
namespace rng_stream {

inline constexpr std::uint64_t kShots = 0x01;
inline constexpr std::uint64_t kSignal = 0x02;
inline constexpr std::uint64_t kBackground = 0x03;
inline constexpr std::uint64_t kPerturbation = 0x04;
inline constexpr std::uint64_t kModulation = 0x05;

/// Stream id for element `index` of module stream `base` (shot index,
/// gate-window index, ...). Keeps per-element draws order-independent.
inline constexpr std::uint64_t indexed(std::uint64_t base, std::uint64_t index) {
    return (base << 32) ^ index;
}

}  // namespace rng_stream

}  // namespace splink

#endif
