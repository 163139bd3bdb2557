#include "blink/phy.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

using namespace blink;

namespace {

int brute_cyclic(const std::vector<int>& c, std::size_t lag) {
    int sum = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        sum += c[i] * c[(i + lag) % c.size()];
    }
    return sum;
}

bool is_rotation(const std::vector<int>& a, const std::vector<int>& b) {
    for (std::size_t shift = 0; shift < a.size(); ++shift) {
        bool same = true;
        for (std::size_t i = 0; i < a.size() && same; ++i) {
            same = a[i] == b[(i + shift) % b.size()];
        }
        if (same) {
            return true;
        }
    }
    return false;
}

}  // namespace

TEST_CASE("m-sequence two-valued autocorrelation") {
    const MSequence seq = gen_msequence();
    REQUIRE(seq.chips.size() == 31);
    CHECK(brute_cyclic(seq.chips, 0) == 31);
    for (std::size_t lag = 1; lag < 31; ++lag) {
        CHECK(brute_cyclic(seq.chips, lag) == -1);
        CHECK(cyclic_autocorrelation(seq.chips, lag) == -1);
    }
    CHECK(cyclic_autocorrelation(seq.chips, 0) == 31);
}

TEST_CASE("every nonzero seed gives a rotation of the same sequence") {
    const MSequence base = gen_msequence(kDefaultMsequenceTaps, 1);
    for (std::uint32_t seed = 1; seed < 32; ++seed) {
        const MSequence s = gen_msequence(kDefaultMsequenceTaps, seed);
        CHECK(s.chips.size() == 31);
        CHECK(is_rotation(base.chips, s.chips));
        const int sum = std::accumulate(s.chips.begin(), s.chips.end(), 0);
        CHECK(std::abs(sum) == 1);
        CHECK(std::all_of(s.chips.begin(), s.chips.end(), [](int c) { return c == 1 || c == -1; }));
    }
}

TEST_CASE("m-sequence rejects bad generators") {
    CHECK_THROWS_AS(gen_msequence(0b100011, 1), std::invalid_argument);  // x^5 + x + 1
    CHECK_THROWS_AS(gen_msequence(kDefaultMsequenceTaps, 0), std::invalid_argument);
    CHECK_NOTHROW(gen_msequence(0b111101, 3));  // x^5 + x^4 + x^3 + x^2 + 1
}

TEST_CASE("monocycle shape") {
    const SampledWaveform p = monocycle();
    REQUIRE(p.size() == 3);
    const double sum = std::accumulate(p.samples.begin(), p.samples.end(), 0.0);
    const double peak = *std::max_element(p.samples.begin(), p.samples.end(),
                                          [](double a, double b) { return std::abs(a) < std::abs(b); });
    CHECK(std::abs(sum) <= 1e-6 * std::abs(peak));
    CHECK(peak == doctest::Approx(1.0));
    CHECK(p.samples[1] == doctest::Approx(1.0));

    CHECK(monocycle(2000).size() == 5);

    const SampledWaveform n = monocycle(kDefaultPulseWidthPs, kSamplePeriodPs, -1);
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(n.samples[i] == -p.samples[i]);
    }
    CHECK_THROWS_AS(monocycle(300, 400), std::invalid_argument);
    CHECK_THROWS_AS(monocycle(1200, 400, 0), std::invalid_argument);
}

TEST_CASE("modulate all-plus chips") {
    MSequence ones;
    ones.chips.assign(31, 1);
    const SampledWaveform pulse = monocycle();
    const SampledWaveform w = modulate(ones, pulse);
    REQUIRE(w.size() == 160);
    for (std::size_t c = 0; c < 31; ++c) {
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(w.samples[5 * c + i] == w.samples[i]);
        }
        CHECK(w.samples[5 * c + 2] == doctest::Approx(1.0));
    }
    for (std::size_t i = 155; i < 160; ++i) {
        CHECK(w.samples[i] == 0.0);
    }
}

TEST_CASE("modulate follows chip signs and is linear in polarity") {
    const MSequence seq = gen_msequence();
    const SampledWaveform w = modulate(seq, monocycle());
    MSequence neg = seq;
    for (int& c : neg.chips) {
        c = -c;
    }
    const SampledWaveform wn = modulate(neg, monocycle());
    for (std::size_t c = 0; c < 31; ++c) {
        CHECK((w.samples[5 * c + 2] > 0) == (seq.chips[c] > 0));
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(wn.samples[i] == -w.samples[i]);
    }
    CHECK_THROWS_AS(modulate(seq, monocycle(2400), 2000), std::invalid_argument);
}

TEST_CASE("modulated signal autocorrelation peaks at lag zero") {
    const SampledWaveform pulse = monocycle();
    const SampledWaveform w = modulate(gen_msequence(), pulse);
    double pulse_energy = 0.0;
    for (double v : pulse.samples) {
        pulse_energy += v * v;
    }
    double best = -1e9;
    std::size_t best_lag = 999;
    for (std::size_t lag = 0; lag < w.size(); ++lag) {
        double acc = 0.0;
        for (std::size_t i = 0; i + lag < w.size(); ++i) {
            acc += w.samples[i] * w.samples[i + lag];
        }
        if (acc > best) {
            best = acc;
            best_lag = lag;
        }
    }
    CHECK(best_lag == 0);
    CHECK(best == doctest::Approx(31.0 * pulse_energy));
}

TEST_CASE("quantizer") {
    CHECK(quantize_sample(1.0, 1.0) == 7);
    CHECK(quantize_sample(-1.0, 1.0) == -7);
    CHECK(quantize_sample(0.0, 1.0) == 0);
    CHECK(quantize_sample(0.5, 1.0) == 4);
    CHECK(quantize_sample(-0.5, 1.0) == -4);
    CHECK(quantize_sample(12.0, 3.0) == 7);
    CHECK(quantize_sample(-1e9, 3.0) == -7);
    CHECK_THROWS_AS(quantize_sample(1.0, 0.0), std::invalid_argument);

    Rng rng(12);
    for (int i = 0; i < 10000; ++i) {
        const double x = rng.uniform(-2.0, 2.0);
        const auto q = quantize_sample(x, 1.3);
        CHECK(q == -quantize_sample(-x, 1.3));
        CHECK(q >= -7);
        CHECK(q <= 7);
    }
}

TEST_CASE("template has 160 coefficients with zero padding") {
    const QuantizedTemplate t = make_template(default_timing_signal());
    REQUIRE(t.length() == kTemplateLength);
    for (std::size_t i = 155; i < 160; ++i) {
        CHECK(t.coeffs[i] == 0);
    }
    std::int64_t energy = 0;
    for (auto c : t.coeffs) {
        CHECK(c >= -7);
        CHECK(c <= 7);
        energy += c * c;
    }
    CHECK(t.energy() == energy);
    CHECK(energy == 31 * (16 + 49 + 16));
}

TEST_CASE("waveform CSV round trip") {
    const SampledWaveform w = default_timing_signal();
    std::stringstream ss;
    write_waveform_csv(ss, w);
    CHECK(ss.str().rfind("sample_index,amplitude\n", 0) == 0);
    const SampledWaveform r = read_waveform_csv(ss);
    REQUIRE(r.size() == w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(r.samples[i] == doctest::Approx(w.samples[i]));
    }

    std::stringstream bare("0.5\n-1\n0.25\n");
    const SampledWaveform b = read_waveform_csv(bare);
    CHECK(b.samples == std::vector<double>{0.5, -1.0, 0.25});
}
