#include "blink/phy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace blink {

std::int64_t QuantizedTemplate::energy() const {
    std::int64_t e = 0;
    for (auto c : coeffs) {
        e += static_cast<std::int64_t>(c) * c;
    }
    return e;
}

MSequence gen_msequence(std::uint32_t taps, std::uint32_t seed_state) {
    constexpr int degree = 5;
    constexpr std::uint32_t mask = (1u << degree) - 1;
    if ((taps >> degree) != 1u || (taps & 1u) == 0u) {
        throw std::invalid_argument("generator polynomial must be degree 5 with a constant term");
    }
    if ((seed_state & mask) == 0u || (seed_state & ~mask) != 0u) {
        throw std::invalid_argument("seed state must be a nonzero 5-bit value");
    }

    const std::uint32_t feedback = taps & mask;
    std::uint32_t state = seed_state;  // bit i holds a[n+i]
    MSequence seq;
    seq.degree = degree;
    seq.generator_taps = taps;
    seq.chips.reserve(kMsequenceLength);

    std::size_t period = 0;
    do {
        seq.chips.push_back((state & 1u) ? -1 : +1);
        const std::uint32_t next = static_cast<std::uint32_t>(std::popcount(state & feedback) & 1);
        state = (state >> 1) | (next << (degree - 1));
        ++period;
    } while (state != seed_state && period <= kMsequenceLength);

    if (period != kMsequenceLength) {
        throw std::invalid_argument("polynomial is not primitive: LFSR period " + std::to_string(period) +
                                    " instead of 31");
    }
    return seq;
}

int cyclic_autocorrelation(std::span<const int> chips, std::size_t lag) {
    const std::size_t n = chips.size();
    int acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += chips[i] * chips[(i + lag) % n];
    }
    return acc;
}

double pulse_shape(double t_ps, Ps width_ps) {
    const double sigma = static_cast<double>(width_ps) / 6.0;
    const double x2 = (t_ps / sigma) * (t_ps / sigma);
    return (1.0 - x2) * std::exp(-0.5 * x2);
}

SampledWaveform monocycle(Ps width_ps, Ps sample_period_ps, int polarity) {
    if (sample_period_ps <= 0) {
        throw std::invalid_argument("sample period must be positive");
    }
    if (width_ps < sample_period_ps) {
        throw std::invalid_argument("pulse width shorter than the sample period");
    }
    if (polarity != 1 && polarity != -1) {
        throw std::invalid_argument("polarity must be +1 or -1");
    }
    const auto n = static_cast<std::size_t>((width_ps + sample_period_ps - 1) / sample_period_ps);
    SampledWaveform w;
    w.sample_period = sample_period_ps;
    w.samples.resize(n);
    const double center = 0.5 * static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = (static_cast<double>(i) - center) * static_cast<double>(sample_period_ps);
        w.samples[i] = pulse_shape(t, width_ps);
    }
    double mean = 0.0;
    for (double v : w.samples) {
        mean += v;
    }
    mean /= static_cast<double>(n);
    double peak = 0.0;
    for (double& v : w.samples) {
        v -= mean;
        peak = std::max(peak, std::abs(v));
    }
    for (double& v : w.samples) {
        v = polarity * v / peak;
    }
    return w;
}

SampledWaveform modulate(const MSequence& seq, const SampledWaveform& pulse, Ps chip_period_ps,
                         std::size_t pad_multiple) {
    if (pulse.sample_period <= 0 || chip_period_ps % pulse.sample_period != 0) {
        throw std::invalid_argument("chip period must be a whole number of samples");
    }
    const auto per_chip = static_cast<std::size_t>(chip_period_ps / pulse.sample_period);
    if (pulse.size() > per_chip) {
        throw std::invalid_argument("pulse wider than the chip period");
    }
    if (pad_multiple == 0) {
        pad_multiple = 1;
    }
    const std::size_t active = seq.chips.size() * per_chip;
    const std::size_t total = (active + pad_multiple - 1) / pad_multiple * pad_multiple;

    SampledWaveform w;
    w.sample_period = pulse.sample_period;
    w.samples.assign(total, 0.0);
    const std::size_t lead = (per_chip - pulse.size()) / 2;
    for (std::size_t c = 0; c < seq.chips.size(); ++c) {
        const double sign = seq.chips[c];
        const std::size_t base = c * per_chip + lead;
        for (std::size_t i = 0; i < pulse.size(); ++i) {
            w.samples[base + i] = sign * pulse.samples[i];
        }
    }
    return w;
}

std::int8_t quantize_sample(double x, double full_scale) {
    if (!(full_scale > 0.0)) {
        throw std::invalid_argument("quantizer full scale must be positive");
    }
    const double r = std::clamp(x / full_scale, -1.0, 1.0);
    return static_cast<std::int8_t>(round_half_away(kQuantMax * r));
}

QuantizedStream quantize(std::span<const double> samples, double full_scale) {
    if (!(full_scale > 0.0)) {
        throw std::invalid_argument("quantizer full scale must be positive");
    }
    QuantizedStream out(samples.size());
    const double inv = 1.0 / full_scale;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double r = std::clamp(samples[i] * inv, -1.0, 1.0);
        out[i] = static_cast<std::int8_t>(round_half_away(kQuantMax * r));
    }
    return out;
}

QuantizedTemplate make_template(const SampledWaveform& tx, double full_scale) {
    return QuantizedTemplate{quantize(tx.samples, full_scale)};
}

SampledWaveform default_timing_signal() {
    return modulate(gen_msequence(), monocycle());
}

void write_waveform_csv(std::ostream& os, const SampledWaveform& w) {
    os << "sample_index,amplitude\n";
    for (std::size_t i = 0; i < w.size(); ++i) {
        os << i << ',' << w.samples[i] << '\n';
    }
}

SampledWaveform read_waveform_csv(std::istream& is, Ps sample_period) {
    SampledWaveform w;
    w.sample_period = sample_period;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        const auto comma = line.find(',');
        const std::string field = comma == std::string::npos ? line : line.substr(comma + 1);
        std::istringstream ss(field);
        double v = 0.0;
        if (!(ss >> v)) {
            if (lineno == 1) {
                continue;  // header
            }
            throw std::invalid_argument("waveform csv: bad amplitude on line " + std::to_string(lineno));
        }
        w.samples.push_back(v);
    }
    if (w.samples.empty()) {
        throw std::invalid_argument("waveform csv: no samples");
    }
    return w;
}

}  // namespace blink
