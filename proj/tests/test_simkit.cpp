#include "blink/report.hpp"
#include "blink/scenario.hpp"
#include "blink/simkit.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace blink;
using blink::testing::chain;
using blink::testing::two_node;

namespace {

bool mentions(const std::vector<std::string>& errors, const std::string& needle) {
    return std::any_of(errors.begin(), errors.end(),
                       [&](const std::string& e) { return e.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("sample statistics") {
    CHECK(sample_mean({5.0, 5.0, 5.0}) == 5.0);
    CHECK(sample_std({5.0, 5.0, 5.0}) == 0.0);
    CHECK(sample_std({7.0}) == 0.0);
    for (std::size_t n : {2u, 10u, 1000u}) {
        std::vector<double> xs;
        for (std::size_t i = 0; i < n; ++i) {
            xs.push_back(i % 2 == 0 ? 3200.0 : -3200.0);
        }
        CHECK(sample_mean(xs) == doctest::Approx(0.0));
        CHECK(sample_std(xs) ==
              doctest::Approx(3200.0 * std::sqrt(static_cast<double>(n) / static_cast<double>(n - 1))));
    }
    CHECK_THROWS_AS(sample_mean({}), std::invalid_argument);
    CHECK_THROWS_AS(sample_std({}), std::invalid_argument);
}

TEST_CASE("offset statistics subtract the reference per sample") {
    const std::vector<std::vector<double>> rows = {{100.0, 300.0, 0.0}, {200.0, 200.0, 100.0}};
    const OffsetStats s = offset_statistics(rows, {"a", "b", "ref"}, 2);
    CHECK(s.reference == "ref");
    REQUIRE(s.nodes.size() == 2);
    CHECK(s.at("a").mean_ps == 100.0);
    CHECK(s.at("a").std_ps == 0.0);
    CHECK(s.at("b").mean_ps == 200.0);
    CHECK_THROWS_AS((void)s.at("ref"), std::out_of_range);
    CHECK_THROWS_AS(offset_statistics({}, {"a"}, 0), std::invalid_argument);
}

TEST_CASE("convergence time") {
    const std::vector<bool> slaves = {false, true, true};
    std::vector<OffsetSample> synced = {{0, {0.0, 0.0, 100.0}}, {1000, {0.0, 0.0, 0.0}}};
    CHECK(convergence_time(synced, slaves, 3200) == Ps{0});
    std::vector<OffsetSample> never = {{0, {0.0, 5000.0, 0.0}}, {1000, {0.0, 0.0, -3201.0}}};
    CHECK_FALSE(convergence_time(never, slaves, 3200).has_value());
    std::vector<OffsetSample> later = {{0, {0.0, 9000.0, 0.0}}, {6400, {0.0, 3200.0, -3200.0}}};
    CHECK(convergence_time(later, slaves, 3200) == Ps{6400});
    // Masters may be anywhere.
    std::vector<OffsetSample> master_off = {{0, {1e9, 0.0, 0.0}}};
    CHECK(convergence_time(master_off, slaves, 3200) == Ps{0});
}

TEST_CASE("beamforming of aligned equidistant emitters") {
    const BeamformResult r = beamform_sum({0.0, 0.0, 0.0}, {2.0, 2.0, 2.0});
    CHECK(r.gain == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(r.equidistant);
    CHECK(beamform_sum({0.0, 600.0, 0.0}, {2.0, 2.0, 2.0}).gain < 3.0);
    CHECK_FALSE(beamform_sum({0.0, 0.0, 0.0}, {2.0, 2.5, 2.0}).equidistant);
    CHECK(beamform_sum({0.0}, {1.0}).gain == doctest::Approx(1.0));
    CHECK_THROWS_AS(beamform_sum({0.0, 0.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("beamforming gain falls as the timing spread grows") {
    // Symmetric spread inside the main lobe of the pulse.
    double previous = 3.0 + 1e-12;
    for (double spread = 0.0; spread <= 300.0; spread += 20.0) {
        const double g = beamform_sum({-spread, 0.0, spread}, {2.0, 2.0, 2.0}).gain;
        CHECK(g <= previous);
        previous = g;
    }
    CHECK(previous < 3.0);
}

TEST_CASE("single synchronized link stays at zero offset") {
    ScenarioConfig cfg = two_node(1.8, 0);
    cfg.measurements = 20;
    const ScenarioResult r = run_scenario(cfg);
    REQUIRE(r.measurement_offsets.size() == 20);
    for (const auto& row : r.measurement_offsets) {
        CHECK(row[1] == 0.0);
    }
    CHECK(r.convergence_time_ps == Ps{0});
}

namespace {

double max_steady_offset(const ScenarioResult& r) {
    double worst = 0.0;
    for (const auto& s : r.samples) {
        if (s.time_since_phase2 < *r.convergence_time_ps + 2 * r.cycle_length_ps) {
            continue;
        }
        for (double o : s.offsets_ps) {
            worst = std::max(worst, std::abs(o));
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("one-hop slaves stay within one tick plus one cycle of drift") {
    ScenarioConfig cfg;
    cfg.name = "star";
    cfg.seed = 9;
    cfg.reference = "master";
    cfg.noiseless = true;
    cfg.measurements = 2000;
    cfg.nodes = {NodeSpec{"master", Role::Master, {}, std::nullopt}};
    const double ppms[] = {50.0, -50.0, 33.0, -7.0};
    for (int i = 0; i < 4; ++i) {
        NodeSpec n{"s" + std::to_string(i), Role::Slave, {}, std::nullopt};
        n.osc.ppm_offset = ppms[i];
        cfg.nodes.push_back(n);
        cfg.links.push_back(LinkSpec{"master", n.name, 1.0 + 0.7 * i, 30.0, true, {}, std::nullopt});
    }
    const ScenarioResult r = run_scenario(cfg);
    REQUIRE(r.convergence_time_ps.has_value());
    const double drift = 50e-6 * static_cast<double>(r.cycle_length_ps);
    CHECK(max_steady_offset(r) <= 3200.0 + drift);
}

TEST_CASE("noiseless chains stay bounded") {
    // Consensus over both tier neighbors lets a chain wander as a group, so the
    // multi-hop floor is two ticks plus drift rather than one.
    for (const auto& name : preset_names()) {
        CAPTURE(name);
        ScenarioConfig cfg = preset(name);
        cfg.noiseless = true;
        cfg.measurements = 1000;
        const ScenarioResult r = run_scenario(cfg);
        REQUIRE(r.convergence_time_ps.has_value());
        double max_ppm = 0.0;
        for (const auto& n : cfg.nodes) {
            max_ppm = std::max(max_ppm, std::abs(n.osc.ppm_offset));
        }
        CHECK(max_steady_offset(r) <= 6400.0 + max_ppm * 1e-6 * static_cast<double>(r.cycle_length_ps));
    }
}

TEST_CASE("runs are deterministic for a fixed seed") {
    ScenarioConfig cfg = preset("indoor-nlos");
    cfg.measurements = 100;
    const std::string a = offsets_csv(run_scenario(cfg));
    const std::string b = offsets_csv(run_scenario(cfg));
    CHECK(a == b);
    cfg.seed = 2;
    CHECK(offsets_csv(run_scenario(cfg)) != a);
}

TEST_CASE("changing the reference shifts the offsets consistently") {
    ScenarioConfig cfg = preset("indoor-los");
    cfg.measurements = 50;
    const ScenarioResult by_node2 = run_scenario(cfg);
    cfg.reference = "master";
    const ScenarioResult by_master = run_scenario(cfg);
    REQUIRE(by_node2.measurement_offsets.size() == by_master.measurement_offsets.size());
    for (std::size_t m = 0; m < by_node2.measurement_offsets.size(); ++m) {
        const auto& a = by_node2.measurement_offsets[m];
        const auto& b = by_master.measurement_offsets[m];
        for (std::size_t i = 0; i < a.size(); ++i) {
            for (std::size_t j = 0; j < a.size(); ++j) {
                CHECK(a[i] - a[j] == doctest::Approx(b[i] - b[j]));
            }
        }
    }
}

TEST_CASE("validation reports every problem") {
    ScenarioConfig cfg = chain(1.0, 1.8, 2.4);
    cfg.nodes[3].name = "node0";
    cfg.seed.reset();
    cfg.links.push_back(LinkSpec{"node0", "ghost", 1.0, 30.0, true, {}, std::nullopt});
    cfg.links[0].distance_m = -1.0;
    const auto errors = validate(cfg);
    CHECK(mentions(errors, "duplicate node id 'node0'"));
    CHECK(mentions(errors, "nodes[1]"));
    CHECK(mentions(errors, "nodes[3]"));
    CHECK(mentions(errors, "unknown node 'ghost'"));
    CHECK(mentions(errors, "seed: required"));
    CHECK(mentions(errors, "links[0].distance_m"));
    CHECK_THROWS_AS(build_network(cfg), ScenarioError);
}

TEST_CASE("validation rejects missing masters and unreachable nodes") {
    ScenarioConfig no_master = chain(1.0, 1.8, 2.4);
    no_master.nodes[0].role = Role::Slave;
    CHECK(mentions(validate(no_master), "at least one master"));

    ScenarioConfig cut = chain(1.0, 1.8, 2.4);
    cut.links[2].snr_db = 2.0;
    CHECK(mentions(validate(cut), "unreachable node 'node1'"));

    ScenarioConfig fast = chain(1.0, 1.8, 2.4);
    fast.nodes[1].osc.ppm_offset = 500.0;
    CHECK(mentions(validate(fast), "nodes[1].oscillator"));

    CHECK(validate(chain(1.0, 1.8, 2.4)).empty());
}
