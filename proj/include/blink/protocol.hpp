#pragma once

#include "blink/channel.hpp"
#include "blink/correlator.hpp"
#include "blink/phy.hpp"
#include "blink/timebase.hpp"
#include "blink/units.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace blink {

enum class Role { Master, Slave };

/// Node ids are indices into Network::nodes.
struct NodeState {
    NodeId id = 0;
    std::string name;
    Role role = Role::Slave;
    int tier = -1;
    std::size_t slot = 0;
    LocalClock clock;
    std::map<NodeId, double> diversity_mem;  // learned one-way delay per neighbor (ps)
    std::map<NodeId, double> weights;        // raw consensus weights, normalized at use
    std::map<NodeId, double> pending;        // TOA relative to the neighbor's slot start (ps)
    Ps tx_shift_ps = 0;                      // fine correction, multiples of kFineStepPs
    Rng osc_rng;

    [[nodiscard]] bool is_master() const { return role == Role::Master; }
};

struct ReceiverConfig {
    double threshold_fraction = 0.5;  // of the template energy
    PeakDetectorConfig peak{};
    double full_scale_factor = 1.0;   // quantizer full scale over the strongest tap amplitude
    std::size_t guard_ticks = 128;    // receive window reach around the slot start
    std::size_t ranging_window = 512; // samples
};

struct ProtocolConfig {
    std::size_t ranging_repetitions = 16;
    Ps ranging_interval_ps = 10'000'000;
    Ps turnaround_ps = kTickPeriodPs;
    bool fine_correction = false;
};

struct TdmaSchedule {
    Ps slot_duration = 6'400'000;
    std::vector<NodeId> slot_owner;  // transmit slots ordered by (tier, id)
    std::map<int, std::size_t> slot_of_tier;
    std::size_t measurement_slot = 0;
    bool has_measurement_slot = true;

    [[nodiscard]] std::size_t slot_count() const { return slot_owner.size() + (has_measurement_slot ? 1 : 0); }
    [[nodiscard]] Ps cycle_length() const { return static_cast<Ps>(slot_count()) * slot_duration; }
};

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RangingResult {
    double pseudo_range_ps = 0.0;
    std::size_t used = 0;
    std::size_t discarded = 0;
    std::vector<Ps> round_trips;
};

struct ReceptionEvent {
    NodeId receiver = 0;
    PeakReport peak;
    Ps window_start_local = 0;
    std::optional<double> toa_rel_ps;  // t_k
};

struct SlotEvent {
    std::int64_t cycle = 0;
    std::size_t slot = 0;
    NodeId transmitter = 0;
    Ps tx_abs_ps = 0;
    std::vector<ReceptionEvent> receptions;
};

struct CorrectionEvent {
    std::int64_t cycle = 0;
    std::size_t slot = 0;
    NodeId node = 0;
    double t_o_ps = 0.0;
    std::int64_t ticks = 0;  // subtracted from the counter
    Ps tx_shift_ps = 0;
    std::int64_t counter_after = 0;
};

/// Instantaneous timer offsets against the first master, taken at a slot boundary.
struct OffsetSample {
    Ps time_since_phase2 = 0;
    std::vector<double> offsets_ps;  // per node, including the tx shift
};

struct CycleLog {
    std::int64_t cycle = 0;
    std::vector<SlotEvent> slots;
    std::vector<CorrectionEvent> corrections;
    std::vector<OffsetSample> samples;
    std::vector<double> measurement_offsets_ps;  // empty when no measurement slot
};

class Network {
public:
    std::vector<NodeState> nodes;
    LinkMatrix links;
    std::map<std::pair<NodeId, NodeId>, LinkParams> link_params;  // key (min, max)
    SampledWaveform tx_signal;
    QuantizedTemplate tmpl;
    CorrelatorConfig correlator{};
    ReceiverConfig receiver{};
    ProtocolConfig protocol{};
    std::uint64_t seed = 0;
    Ps now = 0;
    Ps phase2_start_abs = 0;
    Ps phase2_epoch_local = 0;  // local timer value at which Phase II begins, same at every node

    /// Advances every clock to absolute time `t` (must not go backwards).
    void advance_to(Ps t);
    [[nodiscard]] const LinkParams& link(NodeId a, NodeId b) const;
    [[nodiscard]] bool has_link(NodeId a, NodeId b) const;
    Rng& link_rng(NodeId tx, NodeId rx);
    [[nodiscard]] NodeId first_master() const;
    [[nodiscard]] Ps max_flight_ps() const;
    /// Correlator threshold derived from the template energy.
    [[nodiscard]] std::int32_t threshold() const;

private:
    std::map<std::pair<NodeId, NodeId>, Rng> link_rngs_;
};

/// Receive chain for one transmission: channel, 4-bit quantizer, PTT correlator,
/// peak detector. `tx_abs` is absolute time relative to Network::now.
ReceptionEvent receive_timing_signal(Network& net, NodeId tx, NodeId rx, double tx_abs_from_now,
                                     Ps window_start_local, std::size_t window_len);

/// Phase I pseudo-range between a and b from averaged round trips. Uses scratch
/// ranging timers, so the nodes' main timers keep their state. Stores the result in
/// both diversity memories. Throws ProtocolError when the link is absent or more
/// than half of the repetitions fail to detect a peak.
RangingResult roundtrip_measure(Network& net, NodeId a, NodeId b, std::size_t repetitions = 16);

/// Runs ranging over every linked pair in node-id order.
std::vector<std::pair<std::pair<NodeId, NodeId>, RangingResult>> learn_pseudo_ranges(Network& net);

/// Minimum hop count to a master. With `tier1_cap`, only that many master-adjacent
/// slaves (highest SNR first) may take tier 1. Throws ProtocolError naming any
/// unreachable node.
std::vector<int> assign_tiers(const LinkMatrix& links, const std::vector<NodeId>& masters,
                              std::optional<std::size_t> tier1_cap = std::nullopt,
                              const std::vector<std::vector<double>>* snr_db = nullptr);

/// T_o = sum_k w_k (t_k - learned_k), weights normalized over the given keys.
/// Throws std::invalid_argument on empty or mismatched maps.
double consensus_offset(const std::map<NodeId, double>& measured, const std::map<NodeId, double>& learned,
                        const std::map<NodeId, double>& weights);

/// Nearest whole tick, exact halves toward zero.
std::int64_t offset_to_ticks(double t_o_ps, Ps tick = kTickPeriodPs);

TdmaSchedule build_schedule(const std::vector<NodeState>& nodes, Ps slot_duration, bool measurement_slot = true);

/// Throws ProtocolError if the schedule does not cover every node exactly once in
/// non-decreasing tier order.
void check_schedule(const Network& net, const TdmaSchedule& schedule);

/// Sets Network::now and the Phase II epoch from the first master's timer.
void start_phase2(Network& net, Ps lead_ps = 1'000'000);

/// One blinking cycle. A slave applies the consensus correction over the neighbors heard since its
/// previous correction right before its own transmit slot; masters only listen.
CycleLog run_blink_cycle(Network& net, const TdmaSchedule& schedule, std::int64_t cycle);

/// All nodes pulse at the same local timer value `slot_start_local` (plus their fine
/// shift). Returns absolute emission time minus the reference node's, per node;
/// a node running ahead emits early and gets a negative value.
std::vector<double> measurement_slot(Network& net, NodeId reference, Ps slot_start_local);

/// Local timer of every node minus the first master's, at Network::now.
std::vector<double> clock_offsets(const Network& net);

}  // namespace blink
