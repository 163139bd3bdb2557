#pragma once

#include "blink/phy.hpp"
#include "blink/units.hpp"

#include <cstdint>
#include <vector>

namespace blink {

struct Tap {
    Ps excess_delay_ps = 0;
    double relative_gain = 1.0;

    friend bool operator==(const Tap&, const Tap&) = default;
};

struct LinkParams {
    double distance_m = 1.0;
    double snr_db = kInf;  // peak received pulse power over per-sample noise variance
    std::vector<Tap> taps{Tap{}};
    bool los = true;
    /// Echo fading block length in absolute time; 0 keeps the taps static.
    Ps coherence_ps = 0;

    /// Throws std::invalid_argument on an empty or unsorted tap list, a non-finite
    /// gain, a negative distance, or a LOS link whose first tap is delayed.
    void validate() const;
};

/// Obstructed link: the direct path loses `direct_attenuation_db`; echo gains are
/// relative to the attenuated direct path. Echoes fade as Rayleigh amplitudes that
/// stay constant for `coherence_ps` at a time.
struct NlosProfile {
    double direct_attenuation_db = 10.0;
    std::vector<Tap> echoes{{2000, 0.9}, {5000, 0.3}};
    Ps coherence_ps = 5'000'000'000;
};

/// Mean taps for an obstructed link: attenuated direct path plus delayed echoes.
std::vector<Tap> nlos_taps(const NlosProfile& profile = {});

/// Every tap after the first scaled by an independent Rayleigh amplitude of unit
/// mean power drawn from `rng`.
LinkParams faded_link(const LinkParams& link, Rng& rng);

/// One-way delay distance / c, rounded to whole picoseconds. Throws for d < 0.
Ps propagation_delay(double distance_m);

/// Connectivity per link: 1 iff i != j and snr[i][j] >= gamma_th.
class LinkMatrix {
public:
    LinkMatrix() = default;
    LinkMatrix(std::size_t n, double gamma_th_db);

    [[nodiscard]] std::size_t size() const { return n_; }
    [[nodiscard]] bool operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j] != 0; }
    void set(std::size_t i, std::size_t j, bool v) { entries_[i * n_ + j] = v ? 1 : 0; }
    [[nodiscard]] double gamma_th_db() const { return gamma_th_db_; }
    [[nodiscard]] std::vector<std::size_t> neighbors(std::size_t i) const;

    friend bool operator==(const LinkMatrix&, const LinkMatrix&) = default;

private:
    std::size_t n_ = 0;
    double gamma_th_db_ = 0.0;
    std::vector<std::uint8_t> entries_;
};

/// Throws std::invalid_argument if `snr_db` is not square.
LinkMatrix build_link_matrix(const std::vector<std::vector<double>>& snr_db, double gamma_th_db);

/// Sample grid of a receive window, expressed on the same timeline as the
/// transmit time handed to apply_channel.
struct ReceiveGrid {
    Ps origin = 0;
    std::size_t length = 0;
    Ps sample_period = kSamplePeriodPs;
};

struct ChannelOutput {
    SampledWaveform wave;
    /// Per tap: exact arrival minus the nearest-sample placement (ps).
    std::vector<double> placement_residual_ps;
    /// Noise standard deviation actually applied (0 for an infinite SNR).
    double noise_std = 0.0;
};

/// Superimposes delayed, gain-scaled copies of `tx` onto the receive grid using
/// nearest-sample placement, then adds white Gaussian noise scaled so that the
/// strongest tap's peak power over the noise variance equals link.snr_db.
/// `tx_time` may be fractional; delays are added to it before placement.
ChannelOutput apply_channel(const SampledWaveform& tx, const LinkParams& link, double tx_time,
                            const ReceiveGrid& grid, Rng& rng);

/// Same as above with the grid starting at `tx_time` and long enough for the
/// delayed signal.
ChannelOutput apply_channel(const SampledWaveform& tx, const LinkParams& link, Ps tx_time, Rng& rng);

/// Peak amplitude of the strongest received tap for a waveform with unit peak.
double strongest_tap_gain(const LinkParams& link);

}  // namespace blink
