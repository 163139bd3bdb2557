#include "blink/timebase.hpp"

#include <doctest.h>

#include <stdexcept>

using namespace blink;

namespace {

LocalClock clock_with(double ppm, double walk = 0.0, double jitter = 0.0) {
    OscillatorModel osc;
    osc.ppm_offset = ppm;
    osc.freq_walk_std = walk;
    osc.phase_jitter_std_ps = jitter;
    return LocalClock(0, osc);
}

}  // namespace

TEST_CASE("read_local arithmetic") {
    LocalClock c = clock_with(0.0);
    CHECK(c.read_local() == 0);
    c.set_state(10, 0.0);
    CHECK(c.read_local() == 32000);
    c.set_state(8, 400.0);
    CHECK(c.read_local() == 26000);
}

TEST_CASE("advance without drift is the identity") {
    Rng rng(1);
    LocalClock c = clock_with(0.0);
    c.advance(1'000'000'000, rng);
    CHECK(c.read_local() == 1'000'000'000);
    CHECK(c.fine_phase() >= 0.0);
    CHECK(c.fine_phase() < 3200.0);
}

TEST_CASE("50 ppm over 1 ms gains 50 ns") {
    Rng rng(1);
    LocalClock c = clock_with(50.0);
    c.advance(1'000'000'000, rng);
    CHECK(c.read_local() == 1'000'050'000);
}

TEST_CASE("opposite 50 ppm clocks diverge by 100 ns in 1 ms") {
    Rng rng(1);
    LocalClock fast = clock_with(50.0);
    LocalClock slow = clock_with(-50.0);
    for (int i = 0; i < 1000; ++i) {
        fast.advance(1'000'000, rng);
        slow.advance(1'000'000, rng);
    }
    CHECK(std::llabs(fast.read_local() - slow.read_local() - 100'000) <= 1);
}

TEST_CASE("frequency walk matches a small-step integrator") {
    const double ppm = 50.0;
    const double walk_std = 0.1;
    const std::uint64_t seed = 2024;

    Rng rng(seed);
    LocalClock c = clock_with(ppm, walk_std);
    c.advance(1'000'000'000, rng);

    // Reference: 1 ns steps, walk redrawn at every 1 us boundary of absolute time.
    Rng ref_rng(seed);
    const long double slice_std = walk_std * std::sqrt(1e-6L);
    long double walk = 0.0L;
    long double local = 0.0L;
    for (int slice = 0; slice < 1000; ++slice) {
        for (int step = 0; step < 1000; ++step) {
            local += 1000.0L * (1.0L + (ppm + walk) * 1e-6L);
        }
        walk += slice_std * static_cast<long double>(ref_rng.gaussian());
    }
    CHECK(std::fabs(static_cast<long double>(c.read_local_exact()) - local) <= 1.0L);
    CHECK(c.read_local() != 1'000'050'000);
}

TEST_CASE("chunking of advance does not change the result") {
    Rng a(9);
    Rng b(9);
    LocalClock whole = clock_with(-17.0, 0.2);
    LocalClock parts = whole;
    whole.advance(7'300'000, a);
    for (Ps dt : {1'000'000, 2'500'000, 3'800'000}) {
        parts.advance(dt, b);
    }
    CHECK(std::fabs(whole.read_local_exact() - parts.read_local_exact()) < 1e-3);
}

TEST_CASE("zero-noise linearity holds at every step") {
    Rng rng(3);
    for (double ppm : {-50.0, -12.5, 0.0, 7.0, 33.3, 50.0}) {
        LocalClock c = clock_with(ppm);
        Ps t = 0;
        for (Ps dt : {3200, 400'000, 1'000'000, 25'600'000, 999}) {
            c.advance(dt, rng);
            t += dt;
            const double expected = static_cast<double>(t) * (1.0 + ppm * 1e-6);
            CHECK(std::llabs(c.read_local() - round_half_away(expected)) <= 1);
        }
    }
}

TEST_CASE("readings never decrease without jitter") {
    Rng rng(4);
    LocalClock c = clock_with(-50.0, 0.5);
    Ps last = c.read_local();
    for (int i = 0; i < 5000; ++i) {
        c.advance(static_cast<Ps>(rng.uniform_int(0, 50'000)), rng);
        CHECK(c.read_local() >= last);
        last = c.read_local();
    }
}

TEST_CASE("jitter is white and does not accumulate") {
    Rng rng(5);
    LocalClock c = clock_with(0.0, 0.0, 1000.0);
    double sum = 0.0;
    double sum2 = 0.0;
    const int n = 20000;
    for (int i = 1; i <= n; ++i) {
        c.advance(3200, rng);
        const double err = c.read_local_exact() - 3200.0 * i;
        sum += err;
        sum2 += err * err;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sum2 / n - mean * mean);
    CHECK(std::fabs(mean) < 30.0);
    CHECK(sd == doctest::Approx(1000.0).epsilon(0.05));
}

TEST_CASE("identical seeds give identical clocks") {
    Rng a(77);
    Rng b(77);
    LocalClock x = clock_with(21.0, 0.3, 150.0);
    LocalClock y = x;
    for (int i = 0; i < 100; ++i) {
        x.advance(123'456, a);
        y.advance(123'456, b);
    }
    CHECK(x == y);
}

TEST_CASE("negative advance is rejected") {
    Rng rng(1);
    LocalClock c = clock_with(0.0);
    CHECK_THROWS_AS(c.advance(-1, rng), std::invalid_argument);
}

TEST_CASE("coarse correction steps the counter") {
    LocalClock c = clock_with(0.0);
    c.set_state(100, 1234.5);
    c.apply_coarse_correction(-3);
    CHECK(c.counter() == 97);
    CHECK(c.fine_phase() == 1234.5);
    c.apply_coarse_correction(0);
    CHECK(c.counter() == 97);

    c.set_state(5, 0.0);
    CHECK_THROWS_AS(c.apply_coarse_correction(-10), std::domain_error);
    CHECK(c.counter() == 5);
}

TEST_CASE("reset") {
    Rng rng(1);
    LocalClock c = clock_with(13.0);
    c.set_state(4242, 100.0);
    c.reset();
    CHECK(c.counter() == 0);
    CHECK(c.read_local() == 0);
    CHECK(c.oscillator().ppm_offset == 13.0);

    LocalClock d = clock_with(0.0);
    d.set_state(999, 17.0);
    d.reset();
    d.advance(3200, rng);
    CHECK(d.counter() == 1);
}

TEST_CASE("oscillator validation") {
    OscillatorModel osc;
    osc.ppm_offset = 50.0;
    CHECK_NOTHROW(osc.validate());
    osc.ppm_offset = -50.5;
    CHECK_THROWS_AS(osc.validate(), std::invalid_argument);
    CHECK_NOTHROW(osc.validate(100.0));
    osc = {};
    osc.nominal_freq_hz = 0.0;
    CHECK_THROWS_AS(osc.validate(), std::invalid_argument);
    osc = {};
    osc.freq_walk_std = -1.0;
    CHECK_THROWS_AS(osc.validate(), std::invalid_argument);
}

TEST_CASE("linear projections agree with advance") {
    Rng rng(8);
    LocalClock c = clock_with(-42.0);
    c.set_state(1000, 321.0);
    const double predicted = c.local_after(5'000'000.0);
    const double until = c.abs_until(predicted);
    CHECK(until == doctest::Approx(5'000'000.0).epsilon(1e-12));
    c.advance(5'000'000, rng);
    CHECK(c.read_local_exact() == doctest::Approx(predicted).epsilon(1e-12));
}
