#include "blink/timebase.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace blink {

void OscillatorModel::validate(double ppm_bound) const {
    if (!(nominal_freq_hz > 0.0)) {
        throw std::invalid_argument("oscillator nominal_freq must be positive");
    }
    if (!(std::abs(ppm_offset) <= ppm_bound)) {
        throw std::invalid_argument("oscillator ppm_offset " + std::to_string(ppm_offset) +
                                    " exceeds bound " + std::to_string(ppm_bound));
    }
    if (!(freq_walk_std >= 0.0) || !(phase_jitter_std_ps >= 0.0)) {
        throw std::invalid_argument("oscillator noise std must be non-negative");
    }
}

LocalClock::LocalClock(NodeId id, OscillatorModel osc, Ps tick_period)
    : id_(id), osc_(osc), tick_(tick_period) {
    if (tick_period <= 0) {
        throw std::invalid_argument("tick_period must be positive");
    }
    osc_.validate(kInf);  // the ppm bound is a scenario-level policy
}

double LocalClock::rate() const {
    return 1.0 + (osc_.ppm_offset + walk_ppm_) * 1e-6;
}

void LocalClock::accumulate(double local_ps) {
    fine_phase_ += local_ps;
    const double tick = static_cast<double>(tick_);
    if (fine_phase_ >= tick) {
        const double carry = std::floor(fine_phase_ / tick);
        counter_ += static_cast<std::int64_t>(carry);
        fine_phase_ -= carry * tick;
        // guard against fine_phase landing on tick after the subtraction
        if (fine_phase_ >= tick) {
            fine_phase_ -= tick;
            ++counter_;
        }
        if (fine_phase_ < 0.0) {
            fine_phase_ = 0.0;
        }
    }
}

void LocalClock::advance(Ps dt_abs, Rng& rng) {
    if (dt_abs < 0) {
        throw std::invalid_argument("advance: negative dt_abs " + std::to_string(dt_abs));
    }
    if (osc_.freq_walk_std == 0.0) {
        const double dt = static_cast<double>(dt_abs);
        accumulate(dt + dt * (osc_.ppm_offset + walk_ppm_) * 1e-6);
    } else {
        const double slice_std = osc_.freq_walk_std * std::sqrt(kWalkSlicePs * 1e-12);
        Ps remaining = dt_abs;
        while (remaining > 0) {
            const Ps chunk = std::min(remaining, kWalkSlicePs - walk_slice_elapsed_);
            const double dt = static_cast<double>(chunk);
            accumulate(dt + dt * (osc_.ppm_offset + walk_ppm_) * 1e-6);
            walk_slice_elapsed_ += chunk;
            remaining -= chunk;
            if (walk_slice_elapsed_ == kWalkSlicePs) {
                walk_slice_elapsed_ = 0;
                walk_ppm_ += slice_std * rng.gaussian();
            }
        }
    }
    if (osc_.phase_jitter_std_ps > 0.0) {
        jitter_ps_ = osc_.phase_jitter_std_ps * rng.gaussian();
    }
}

double LocalClock::read_local_exact() const {
    return static_cast<double>(counter_) * static_cast<double>(tick_) + fine_phase_ + jitter_ps_;
}

Ps LocalClock::read_local() const {
    return round_half_away(read_local_exact());
}

void LocalClock::apply_coarse_correction(std::int64_t offset_ticks) {
    if (counter_ + offset_ticks < 0) {
        throw std::domain_error("coarse correction of " + std::to_string(offset_ticks) +
                                " ticks drives counter " + std::to_string(counter_) +
                                " negative on node " + std::to_string(id_));
    }
    counter_ += offset_ticks;
}

void LocalClock::reset() {
    counter_ = 0;
    fine_phase_ = 0.0;
    jitter_ps_ = 0.0;
}

void LocalClock::set_state(std::int64_t counter, double fine_phase_ps) {
    if (counter < 0 || fine_phase_ps < 0.0 || fine_phase_ps >= static_cast<double>(tick_)) {
        throw std::invalid_argument("set_state: counter must be >= 0 and fine phase within one tick");
    }
    counter_ = counter;
    fine_phase_ = fine_phase_ps;
}

double LocalClock::local_after(double dt_abs) const {
    return read_local_exact() + dt_abs * rate();
}

double LocalClock::abs_until(double local) const {
    return (local - read_local_exact()) / rate();
}

}  // namespace blink
