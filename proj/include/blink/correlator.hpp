#pragma once

#include "blink/phy.hpp"
#include "blink/timebase.hpp"
#include "blink/units.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace blink {

/// PTT correlator geometry: s parallel samples and k correlation points per
/// system clock, template length L processed by L/s arrays.
struct CorrelatorConfig {
    std::size_t s = 8;
    std::size_t k = 8;
    std::size_t template_len = kTemplateLength;
    Ps sys_clock_period = kTickPeriodPs;
    Ps sample_period = kSamplePeriodPs;

    [[nodiscard]] std::size_t arrays() const { return template_len / s; }
    /// Throws std::invalid_argument when the geometry is inconsistent.
    void validate() const;
};

/// Correlator output, one row of `branches` values per system-clock cycle.
struct BranchOutputs {
    std::size_t branches = 8;
    std::vector<std::int32_t> values;  // cycle-major

    [[nodiscard]] std::size_t cycles() const { return branches == 0 ? 0 : values.size() / branches; }
    [[nodiscard]] std::int32_t at(std::size_t cycle, std::size_t branch) const {
        return values[cycle * branches + branch];
    }
    /// Lag index m*s + b order; identical to the cycle-major storage.
    [[nodiscard]] std::span<const std::int32_t> flatten() const { return values; }
};

struct PeakReport {
    std::int64_t coarse_cycle = 0;
    std::size_t branch = 0;
    std::int32_t value = 0;
    bool detected = false;

    [[nodiscard]] std::int64_t lag(std::size_t s = 8) const {
        return coarse_cycle * static_cast<std::int64_t>(s) + static_cast<std::int64_t>(branch);
    }
    friend bool operator==(const PeakReport&, const PeakReport&) = default;
};

enum class PeakSearch {
    FirstCrossing,  // strongest branch in the first cycle with a crossing
    GuardedMax,     // strongest lag within a guard window after the first crossing
};

struct PeakDetectorConfig {
    PeakSearch mode = PeakSearch::GuardedMax;
    std::size_t guard_cycles = 1;
};

/// Lag 0 of the template lines up with the first sample of the transmitted
/// signal, so the detected lag is the arrival sample itself. Every node uses the
/// same template, hence the same constant.
inline constexpr Ps kTemplateAlignmentPs = 0;

/// out[n] = sum_i stream[n + i] * coeff[i] for n in [0, len - L]. Exact integers.
std::vector<std::int32_t> direct_correlate(std::span<const std::int8_t> stream, const QuantizedTemplate& tmpl);

/// Cycle-by-cycle PTT model. Each cycle m, array a multiplies the s-sample block
/// m + a (and the spill into block m + a + 1) with coefficient block a, producing k
/// partial sums that are added across the L/s arrays. Branch b of cycle m equals
/// direct_correlate at lag m*s + b. Emits (len - L) / s complete cycles; the stream
/// length must be a multiple of s.
BranchOutputs ptt_correlate(std::span<const std::int8_t> stream, const CorrelatorConfig& cfg,
                            const QuantizedTemplate& tmpl);

/// Finds the first output at or above `threshold` and refines it per `cfg`.
/// Ties resolve to the lower lag (lower branch within a cycle).
PeakReport detect_peak(const BranchOutputs& outputs, std::int32_t threshold, const PeakDetectorConfig& cfg = {});

/// TOA in local picoseconds: window start + cycle * tick + branch * tick / s,
/// minus kTemplateAlignmentPs. Throws std::logic_error for an undetected peak.
Ps toa_from_peak(const PeakReport& peak, const LocalClock& clock, Ps rx_window_start_local, std::size_t s = 8);

}  // namespace blink
