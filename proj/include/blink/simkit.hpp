#pragma once

#include "blink/channel.hpp"
#include "blink/protocol.hpp"
#include "blink/timebase.hpp"
#include "blink/units.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace blink {

inline constexpr int kScenarioSchemaVersion = 1;

struct NodeSpec {
    std::string name;
    Role role = Role::Slave;
    OscillatorModel osc{};
    std::optional<std::int64_t> initial_offset_ticks;  // drawn from the seed when absent
};

struct LinkSpec {
    std::string a;
    std::string b;
    double distance_m = 1.0;
    double snr_db = 30.0;
    bool los = true;
    std::vector<Tap> taps;  // empty: single LOS tap, or the NLOS profile when los == false
    std::optional<double> weight;  // raw consensus weight applied at both ends
};

enum class InitialPhase { Random, Aligned };

struct ScenarioConfig {
    int schema_version = kScenarioSchemaVersion;
    std::string name = "scenario";
    std::vector<NodeSpec> nodes;
    std::vector<LinkSpec> links;
    double gamma_th_db = 6.0;
    double ppm_bound = kDefaultPpmBound;
    Ps slot_duration_ps = 6'400'000;
    std::size_t warmup_cycles = 3;
    std::size_t measurements = 4000;  // M, one per cycle after warm-up
    std::optional<std::uint64_t> seed;
    Ps sigma_tol_ps = kTickPeriodPs;
    std::string reference;  // node name used as the zero of measurement-slot offsets
    bool fine_correction = false;
    bool noiseless = false;
    std::int64_t initial_offset_max_ticks = 100;
    InitialPhase initial_phase = InitialPhase::Random;
    double master_weight = 1.0;  // multiplies the raw weight of links to masters
    std::optional<std::size_t> tier1_cap;
    ReceiverConfig receiver{};
    ProtocolConfig protocol{};
    NlosProfile nlos{};
    std::string pulse_csv;  // optional recorded pulse replacing the monocycle
    bool keep_trace = false;

    [[nodiscard]] std::size_t cycles() const { return warmup_cycles + measurements; }
};

/// Every problem found, each prefixed by its field path. Empty when valid.
std::vector<std::string> validate(const ScenarioConfig& cfg);

class ScenarioError : public std::runtime_error {
public:
    explicit ScenarioError(std::vector<std::string> problems);
    [[nodiscard]] const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

struct NodeOffsetStats {
    std::string name;
    NodeId id = 0;
    double mean_ps = 0.0;
    double std_ps = 0.0;
    std::size_t count = 0;
};

struct OffsetStats {
    std::string reference;
    std::vector<NodeOffsetStats> nodes;  // reference node excluded

    [[nodiscard]] const NodeOffsetStats& at(const std::string& name) const;
};

struct ScenarioResult {
    ScenarioConfig config;
    std::vector<std::string> node_names;
    std::vector<int> tiers;
    std::vector<std::pair<std::pair<NodeId, NodeId>, RangingResult>> ranging;
    Ps cycle_length_ps = 0;
    std::vector<std::int64_t> measured_cycles;
    std::vector<std::vector<double>> measurement_offsets;  // [measurement][node], reference = 0
    std::vector<OffsetSample> samples;
    std::vector<CycleLog> trace;  // only with keep_trace
    OffsetStats stats;
    std::optional<Ps> convergence_time_ps;
};

/// Builds the network (clocks, links, tiers, weights, signals) without running it.
Network build_network(const ScenarioConfig& cfg);

/// Phase I, then warm-up and M measured blinking cycles. Throws ScenarioError for
/// an invalid config and ProtocolError for a runtime protocol failure.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

/// First sample time at which every slave is within sigma_tol of the master.
std::optional<Ps> convergence_time(const std::vector<OffsetSample>& samples, const std::vector<bool>& is_slave,
                                   Ps sigma_tol);

/// Sample mean and unbiased standard deviation of each node's series, after
/// subtracting the reference node's series sample by sample.
OffsetStats offset_statistics(const std::vector<std::vector<double>>& per_sample_offsets,
                              const std::vector<std::string>& names, NodeId reference);

double sample_mean(const std::vector<double>& xs);
double sample_std(const std::vector<double>& xs);

struct BeamformResult {
    double gain = 0.0;
    bool equidistant = true;
};

/// Every node emits one pulse at its emission offset (ps); the receiver sums the
/// arrivals. Returns the peak |sum| over the single-pulse peak.
BeamformResult beamform_sum(const std::vector<double>& emission_offsets_ps, const std::vector<double>& distances_m,
                            Ps pulse_width_ps = kDefaultPulseWidthPs);

}  // namespace blink
