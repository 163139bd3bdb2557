#include "blink/correlator.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

namespace blink {

void CorrelatorConfig::validate() const {
    if (s == 0 || k == 0 || template_len == 0) {
        throw std::invalid_argument("correlator dimensions must be positive");
    }
    if (template_len % s != 0) {
        throw std::invalid_argument("template length " + std::to_string(template_len) +
                                    " not divisible by s=" + std::to_string(s));
    }
    if (k != s) {
        throw std::invalid_argument("k must equal s: one correlation point per lane per clock");
    }
    if (sample_period <= 0 || static_cast<Ps>(s) * sample_period != sys_clock_period) {
        throw std::invalid_argument("s * sample period must equal the system clock period");
    }
}

std::vector<std::int32_t> direct_correlate(std::span<const std::int8_t> stream, const QuantizedTemplate& tmpl) {
    const std::size_t L = tmpl.length();
    if (L == 0 || stream.size() < L) {
        throw std::invalid_argument("stream shorter than template");
    }
    const std::size_t lags = stream.size() - L + 1;
    std::vector<std::int32_t> out(lags, 0);
    for (std::size_t n = 0; n < lags; ++n) {
        std::int32_t acc = 0;
        for (std::size_t i = 0; i < L; ++i) {
            acc += static_cast<std::int32_t>(stream[n + i]) * tmpl.coeffs[i];
        }
        out[n] = acc;
    }
    return out;
}

namespace {

// Hot path for the s = k = 8 build; same arithmetic as the generic loop.
template <std::size_t S>
void ptt_fixed(std::span<const std::int8_t> x, std::span<const std::int8_t> c, std::size_t cycles,
               std::vector<std::int32_t>& out) {
    const std::size_t arrays = c.size() / S;
    std::vector<std::int16_t> xs(x.begin(), x.end());
    std::vector<std::int16_t> cs(c.begin(), c.end());
    for (std::size_t m = 0; m < cycles; ++m) {
        std::array<std::int32_t, S> acc{};
        for (std::size_t a = 0; a < arrays; ++a) {
            const std::int16_t* block = xs.data() + (m + a) * S;
            const std::int16_t* coef = cs.data() + a * S;
            for (std::size_t j = 0; j < S; ++j) {
                const std::int32_t cj = coef[j];
                for (std::size_t b = 0; b < S; ++b) {
                    acc[b] += cj * block[b + j];
                }
            }
        }
        std::copy(acc.begin(), acc.end(), out.begin() + static_cast<std::ptrdiff_t>(m * S));
    }
}

}  // namespace

BranchOutputs ptt_correlate(std::span<const std::int8_t> stream, const CorrelatorConfig& cfg,
                            const QuantizedTemplate& tmpl) {
    cfg.validate();
    if (tmpl.length() != cfg.template_len) {
        throw std::invalid_argument("template length does not match correlator config");
    }
    if (stream.size() % cfg.s != 0) {
        throw std::invalid_argument("stream length must be a multiple of s");
    }
    if (stream.size() < cfg.template_len) {
        throw std::invalid_argument("stream shorter than template");
    }
    const std::size_t s = cfg.s;
    const std::size_t cycles = (stream.size() - cfg.template_len) / s;
    BranchOutputs out;
    out.branches = s;
    out.values.assign(cycles * s, 0);

    if (s == 8) {
        ptt_fixed<8>(stream, tmpl.coeffs, cycles, out.values);
        return out;
    }

    const std::size_t arrays = cfg.arrays();
    std::vector<std::int32_t> acc(s);
    for (std::size_t m = 0; m < cycles; ++m) {
        std::fill(acc.begin(), acc.end(), 0);
        for (std::size_t a = 0; a < arrays; ++a) {
            const std::size_t block = (m + a) * s;
            for (std::size_t j = 0; j < s; ++j) {
                const std::int32_t cj = tmpl.coeffs[a * s + j];
                for (std::size_t b = 0; b < s; ++b) {
                    acc[b] += cj * stream[block + b + j];
                }
            }
        }
        std::copy(acc.begin(), acc.end(), out.values.begin() + static_cast<std::ptrdiff_t>(m * s));
    }
    return out;
}

PeakReport detect_peak(const BranchOutputs& outputs, std::int32_t threshold, const PeakDetectorConfig& cfg) {
    if (threshold <= 0) {
        throw std::invalid_argument("peak threshold must be positive");
    }
    PeakReport report;
    const auto& v = outputs.values;
    const std::size_t s = outputs.branches;
    const auto first = std::find_if(v.begin(), v.end(), [threshold](std::int32_t x) { return x >= threshold; });
    if (first == v.end()) {
        return report;
    }
    const auto first_lag = static_cast<std::size_t>(first - v.begin());

    // lags before the first crossing are below threshold, so scanning from it suffices
    std::size_t end = first_lag + 1;
    if (cfg.mode == PeakSearch::FirstCrossing) {
        end = first_lag / s * s + s;
    } else {
        end = std::max(end, first_lag + cfg.guard_cycles * s);
    }
    end = std::min(end, v.size());

    std::size_t best = first_lag;
    for (std::size_t n = first_lag + 1; n < end; ++n) {
        if (v[n] > v[best]) {
            best = n;
        }
    }
    report.detected = true;
    report.coarse_cycle = static_cast<std::int64_t>(best / s);
    report.branch = best % s;
    report.value = v[best];
    return report;
}

Ps toa_from_peak(const PeakReport& peak, const LocalClock& clock, Ps rx_window_start_local, std::size_t s) {
    if (!peak.detected) {
        throw std::logic_error("toa_from_peak: no peak detected");
    }
    const Ps tick = clock.tick_period();
    return rx_window_start_local + peak.coarse_cycle * tick +
           static_cast<Ps>(peak.branch) * (tick / static_cast<Ps>(s)) - kTemplateAlignmentPs;
}

}  // namespace blink
