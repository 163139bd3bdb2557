#pragma once

#include "blink/simkit.hpp"

#include <string>

namespace blink::testing {

/// One master and one slave on a single noiseless link, phases aligned.
inline ScenarioConfig two_node(double distance_m, std::int64_t slave_offset_ticks, double slave_ppm = 0.0) {
    ScenarioConfig cfg;
    cfg.name = "two-node";
    cfg.seed = 11;
    cfg.reference = "master";
    cfg.noiseless = true;
    cfg.initial_phase = InitialPhase::Aligned;
    NodeSpec m{"master", Role::Master, {}, std::nullopt};
    NodeSpec s{"slave", Role::Slave, {}, slave_offset_ticks};
    s.osc.ppm_offset = slave_ppm;
    cfg.nodes = {m, s};
    cfg.links = {LinkSpec{"master", "slave", distance_m, 30.0, true, {}, std::nullopt}};
    cfg.warmup_cycles = 0;
    cfg.measurements = 1;
    return cfg;
}

/// Master - node0 - node2 - node1 chain.
inline ScenarioConfig chain(double d01, double d12, double d23) {
    ScenarioConfig cfg;
    cfg.name = "chain";
    cfg.seed = 5;
    cfg.reference = "node2";
    cfg.nodes = {NodeSpec{"master", Role::Master, {}, std::nullopt}, NodeSpec{"node0", Role::Slave, {}, std::nullopt},
                 NodeSpec{"node1", Role::Slave, {}, std::nullopt}, NodeSpec{"node2", Role::Slave, {}, std::nullopt}};
    cfg.links = {LinkSpec{"master", "node0", d01, 30.0, true, {}, std::nullopt},
                 LinkSpec{"node0", "node2", d12, 30.0, true, {}, std::nullopt},
                 LinkSpec{"node2", "node1", d23, 30.0, true, {}, std::nullopt}};
    return cfg;
}

}  // namespace blink::testing
