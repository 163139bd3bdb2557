#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace blink {

/// Picoseconds. Absolute simulation time and local timer readings share this unit.
using Ps = std::int64_t;

using NodeId = std::uint32_t;

inline constexpr Ps kSamplePeriodPs = 400;   // 2.5 GSps
inline constexpr Ps kTickPeriodPs = 3200;    // 312.5 MHz system clock
inline constexpr Ps kFineStepPs = 200;       // transmitter shift granularity
inline constexpr double kSpeedOfLight = 299'792'458.0;
inline constexpr double kDefaultPpmBound = 50.0;

/// Round half away from zero; the single rounding rule used for time conversions.
inline std::int64_t round_half_away(double x) {
    return static_cast<std::int64_t>(std::round(x));
}

/// Round to nearest, exact halves toward zero.
inline std::int64_t round_half_toward_zero(double x) {
    const double r = std::round(x);
    if (std::abs(x - std::trunc(x)) == 0.5) {
        return static_cast<std::int64_t>(std::trunc(x));
    }
    return static_cast<std::int64_t>(r);
}

/// Seeded random stream.
///
/// `std::normal_distribution` is implementation-defined, so Gaussian draws use
/// Box-Muller over the bits of a fixed engine; traces then stay identical
/// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(engine_() % span);
    }

    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return mag * std::cos(2.0 * std::numbers::pi * u2);
    }

    double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// SplitMix64 finalizer, used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stream seed for (scenario seed, domain tag, a, b); independent of call order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t a = 0,
                                 std::uint64_t b = 0) {
    return mix_seed(mix_seed(mix_seed(mix_seed(seed) ^ tag) ^ a) ^ b);
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace blink
