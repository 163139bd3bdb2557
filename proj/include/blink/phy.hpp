#pragma once

#include "blink/units.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace blink {

/// Generator polynomial as a coefficient bitmask: bit i set means x^i is present.
/// x^5 + x^2 + 1 is 0b100101.
inline constexpr std::uint32_t kDefaultMsequenceTaps = 0b100101;
inline constexpr std::uint32_t kDefaultMsequenceSeed = 1;
inline constexpr std::size_t kMsequenceLength = 31;

inline constexpr Ps kDefaultPulseWidthPs = 1200;
inline constexpr Ps kDefaultChipPeriodPs = 2000;
inline constexpr std::size_t kTemplateLength = 160;
inline constexpr int kQuantMax = 7;

struct MSequence {
    std::vector<int> chips;  // bipolar, +1 for LFSR bit 0 and -1 for bit 1
    int degree = 5;
    std::uint32_t generator_taps = kDefaultMsequenceTaps;
};

struct SampledWaveform {
    std::vector<double> samples;
    Ps sample_period = kSamplePeriodPs;
    Ps origin = 0;  // time of sample 0

    [[nodiscard]] std::size_t size() const { return samples.size(); }
};

/// 4-bit sign-magnitude codes restricted to [-7, +7].
using QuantizedStream = std::vector<std::int8_t>;

struct QuantizedTemplate {
    QuantizedStream coeffs;

    [[nodiscard]] std::size_t length() const { return coeffs.size(); }
    /// Matched-filter peak, sum of squared coefficients.
    [[nodiscard]] std::int64_t energy() const;
};

/// Degree-5 Fibonacci LFSR, a[n+5] = sum of a[n+i] for each x^i tap below x^5.
/// Throws std::invalid_argument for a zero seed, a malformed polynomial, or a
/// polynomial whose sequence period is not 31.
MSequence gen_msequence(std::uint32_t taps = kDefaultMsequenceTaps,
                        std::uint32_t seed_state = kDefaultMsequenceSeed);

/// Cyclic autocorrelation of a bipolar sequence at `lag`.
int cyclic_autocorrelation(std::span<const int> chips, std::size_t lag);

/// Continuous pulse shape (Gaussian second derivative), peak 1 at t = 0.
/// The Gaussian width is set so that the nominal pulse width spans six sigma.
double pulse_shape(double t_ps, Ps width_ps = kDefaultPulseWidthPs);

/// Samples the pulse over ceil(width / sample_period) points, centered, with the
/// residual DC removed and the center sample normalized to `polarity`.
SampledWaveform monocycle(Ps width_ps = kDefaultPulseWidthPs, Ps sample_period_ps = kSamplePeriodPs,
                          int polarity = +1);

/// BPSK: one pulse per chip, sign = chip, centered in each chip; zero-padded to a
/// multiple of `pad_multiple` samples.
SampledWaveform modulate(const MSequence& seq, const SampledWaveform& pulse,
                         Ps chip_period_ps = kDefaultChipPeriodPs, std::size_t pad_multiple = 8);

/// round(7 * clamp(x / full_scale, -1, 1)), halves away from zero.
std::int8_t quantize_sample(double x, double full_scale);
QuantizedStream quantize(std::span<const double> samples, double full_scale);

/// Quantized matched template of a transmitted waveform at unit full scale.
QuantizedTemplate make_template(const SampledWaveform& tx, double full_scale = 1.0);

/// Default timing signal: m-sequence, monocycle, 2 ns chips, padded to 160 samples.
SampledWaveform default_timing_signal();

void write_waveform_csv(std::ostream& os, const SampledWaveform& w);
/// Reads "sample_index,amplitude" rows (or a bare amplitude column); header optional.
SampledWaveform read_waveform_csv(std::istream& is, Ps sample_period = kSamplePeriodPs);

}  // namespace blink
