#include "blink/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace blink {

void LinkParams::validate() const {
    if (!(distance_m >= 0.0) || !std::isfinite(distance_m)) {
        throw std::invalid_argument("link distance must be finite and non-negative");
    }
    if (taps.empty()) {
        throw std::invalid_argument("link has an empty tap list");
    }
    for (std::size_t i = 0; i < taps.size(); ++i) {
        if (!std::isfinite(taps[i].relative_gain)) {
            throw std::invalid_argument("tap gain must be finite");
        }
        if (taps[i].excess_delay_ps < 0) {
            throw std::invalid_argument("tap excess delay must be non-negative");
        }
        if (i > 0 && taps[i].excess_delay_ps < taps[i - 1].excess_delay_ps) {
            throw std::invalid_argument("taps must be sorted by excess delay");
        }
    }
    if (los && taps.front().excess_delay_ps != 0) {
        throw std::invalid_argument("LOS link must have its first tap at zero excess delay");
    }
    if (std::isnan(snr_db)) {
        throw std::invalid_argument("link snr is NaN");
    }
}

std::vector<Tap> nlos_taps(const NlosProfile& profile) {
    const double direct = std::pow(10.0, -profile.direct_attenuation_db / 20.0);
    std::vector<Tap> taps{{0, direct}};
    for (const auto& echo : profile.echoes) {
        taps.push_back({echo.excess_delay_ps, direct * echo.relative_gain});
    }
    std::stable_sort(taps.begin(), taps.end(),
                     [](const Tap& a, const Tap& b) { return a.excess_delay_ps < b.excess_delay_ps; });
    return taps;
}

LinkParams faded_link(const LinkParams& link, Rng& rng) {
    LinkParams out = link;
    for (std::size_t i = 1; i < out.taps.size(); ++i) {
        const double re = rng.gaussian();
        const double im = rng.gaussian();
        out.taps[i].relative_gain *= std::sqrt((re * re + im * im) / 2.0);
    }
    return out;
}

Ps propagation_delay(double distance_m) {
    if (!(distance_m >= 0.0)) {
        throw std::invalid_argument("negative distance " + std::to_string(distance_m));
    }
    return round_half_away(distance_m / kSpeedOfLight * 1e12);
}

LinkMatrix::LinkMatrix(std::size_t n, double gamma_th_db)
    : n_(n), gamma_th_db_(gamma_th_db), entries_(n * n, 0) {}

std::vector<std::size_t> LinkMatrix::neighbors(std::size_t i) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n_; ++j) {
        if ((*this)(i, j)) {
            out.push_back(j);
        }
    }
    return out;
}

LinkMatrix build_link_matrix(const std::vector<std::vector<double>>& snr_db, double gamma_th_db) {
    const std::size_t n = snr_db.size();
    LinkMatrix m(n, gamma_th_db);
    for (std::size_t i = 0; i < n; ++i) {
        if (snr_db[i].size() != n) {
            throw std::invalid_argument("snr matrix is not square");
        }
        for (std::size_t j = 0; j < n; ++j) {
            m.set(i, j, i != j && snr_db[i][j] >= gamma_th_db);
        }
    }
    return m;
}

double strongest_tap_gain(const LinkParams& link) {
    double g = 0.0;
    for (const auto& t : link.taps) {
        g = std::max(g, std::abs(t.relative_gain));
    }
    return g;
}

ChannelOutput apply_channel(const SampledWaveform& tx, const LinkParams& link, double tx_time,
                            const ReceiveGrid& grid, Rng& rng) {
    if (link.taps.empty()) {
        throw std::invalid_argument("apply_channel: empty tap list");
    }
    if (tx.samples.empty()) {
        throw std::invalid_argument("apply_channel: empty transmit waveform");
    }
    if (grid.sample_period <= 0) {
        throw std::invalid_argument("apply_channel: bad sample period");
    }

    ChannelOutput out;
    out.wave.sample_period = grid.sample_period;
    out.wave.origin = grid.origin;
    out.wave.samples.assign(grid.length, 0.0);

    const double period = static_cast<double>(grid.sample_period);
    const double flight = static_cast<double>(propagation_delay(link.distance_m));
    const auto len = static_cast<std::int64_t>(grid.length);
    for (const auto& tap : link.taps) {
        const double arrival = tx_time + flight + static_cast<double>(tap.excess_delay_ps);
        const double pos = (arrival - static_cast<double>(grid.origin)) / period;
        const std::int64_t idx = round_half_away(pos);
        out.placement_residual_ps.push_back((pos - static_cast<double>(idx)) * period);
        for (std::size_t i = 0; i < tx.size(); ++i) {
            const std::int64_t k = idx + static_cast<std::int64_t>(i);
            if (k >= 0 && k < len) {
                out.wave.samples[static_cast<std::size_t>(k)] += tap.relative_gain * tx.samples[i];
            }
        }
    }

    if (std::isfinite(link.snr_db)) {
        double tx_peak = 0.0;
        for (double v : tx.samples) {
            tx_peak = std::max(tx_peak, std::abs(v));
        }
        const double peak = strongest_tap_gain(link) * tx_peak;
        out.noise_std = peak / std::sqrt(std::pow(10.0, link.snr_db / 10.0));
        for (double& v : out.wave.samples) {
            v += out.noise_std * rng.gaussian();
        }
    }
    return out;
}

ChannelOutput apply_channel(const SampledWaveform& tx, const LinkParams& link, Ps tx_time, Rng& rng) {
    Ps max_excess = 0;
    for (const auto& t : link.taps) {
        max_excess = std::max(max_excess, t.excess_delay_ps);
    }
    const Ps span = propagation_delay(link.distance_m) + max_excess;
    const std::size_t extra = static_cast<std::size_t>((span + tx.sample_period - 1) / tx.sample_period) + 1;
    ReceiveGrid grid{tx_time, tx.size() + extra, tx.sample_period};
    return apply_channel(tx, link, static_cast<double>(tx_time), grid, rng);
}

}  // namespace blink
