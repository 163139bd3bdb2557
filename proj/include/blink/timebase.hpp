#pragma once

#include "blink/units.hpp"

#include <cstdint>

namespace blink {

/// Imperfect oscillator driving a node's timer.
struct OscillatorModel {
    double nominal_freq_hz = 25e6;
    double ppm_offset = 0.0;          // signed fractional frequency error
    double freq_walk_std = 0.0;       // ppm per sqrt(second) of absolute time
    double phase_jitter_std_ps = 0.0; // white, non-accumulating readout jitter

    /// Throws std::invalid_argument when a field is out of range.
    void validate(double ppm_bound = kDefaultPpmBound) const;

    friend bool operator==(const OscillatorModel&, const OscillatorModel&) = default;
};

/// Free-running coarse-tick timer of one node.
///
/// Local time is `counter * tick_period + fine_phase`. The sub-tick phase is kept in
/// floating point so that drift below one picosecond per step still accumulates;
/// readings are rounded half away from zero.
class LocalClock {
public:
    /// Frequency random walk is integrated in fixed slices of absolute time.
    static constexpr Ps kWalkSlicePs = 1'000'000;

    LocalClock() = default;
    LocalClock(NodeId id, OscillatorModel osc, Ps tick_period = kTickPeriodPs);

    /// Lets `dt_abs` picoseconds of absolute time pass. Throws on negative input.
    void advance(Ps dt_abs, Rng& rng);

    [[nodiscard]] Ps read_local() const;
    [[nodiscard]] double read_local_exact() const;

    /// Steps the counter; fine phase is untouched. Throws std::domain_error if the
    /// counter would go negative.
    void apply_coarse_correction(std::int64_t offset_ticks);

    void reset();

    /// Sets counter and sub-tick phase directly (cold-start initialization).
    void set_state(std::int64_t counter, double fine_phase_ps);

    /// Local picoseconds elapsed per absolute picosecond right now.
    [[nodiscard]] double rate() const;

    /// Noise-free projection of the local reading `dt_abs` from now (may be negative).
    [[nodiscard]] double local_after(double dt_abs) const;

    /// Absolute time from now until the local reading equals `local`, noise-free.
    [[nodiscard]] double abs_until(double local) const;

    [[nodiscard]] NodeId node_id() const { return id_; }
    [[nodiscard]] std::int64_t counter() const { return counter_; }
    [[nodiscard]] double fine_phase() const { return fine_phase_; }
    [[nodiscard]] Ps tick_period() const { return tick_; }
    [[nodiscard]] const OscillatorModel& oscillator() const { return osc_; }
    [[nodiscard]] double walk_ppm() const { return walk_ppm_; }

    friend bool operator==(const LocalClock&, const LocalClock&) = default;

private:
    void accumulate(double local_ps);

    NodeId id_ = 0;
    OscillatorModel osc_{};
    Ps tick_ = kTickPeriodPs;
    std::int64_t counter_ = 0;
    double fine_phase_ = 0.0;
    double walk_ppm_ = 0.0;
    Ps walk_slice_elapsed_ = 0;
    double jitter_ps_ = 0.0;
};

}  // namespace blink
