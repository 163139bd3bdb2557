#include "blink/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>
#include <string>

namespace blink {

namespace {

constexpr std::uint64_t kLinkStreamTag = 0x4c494e4b;  // "LINK"
constexpr std::uint64_t kFadeStreamTag = 0x46414445;  // "FADE"

std::pair<NodeId, NodeId> link_key(NodeId a, NodeId b) {
    return {std::min(a, b), std::max(a, b)};
}

std::size_t round_up(std::size_t v, std::size_t m) {
    return (v + m - 1) / m * m;
}

ReceptionEvent receive_with_clock(Network& net, NodeId tx, NodeId rx, const LocalClock& rx_clock,
                                  double tx_abs_from_now, Ps window_start_local, std::size_t window_len) {
    const LinkParams* link_ptr = &net.link(tx, rx);
    LinkParams faded;
    if (link_ptr->coherence_ps > 0) {
        // Both directions share the realization of the current block.
        const auto key = link_key(tx, rx);
        const auto abs_time = static_cast<double>(net.now) + tx_abs_from_now;
        const auto block = static_cast<std::uint64_t>(std::floor(abs_time / static_cast<double>(link_ptr->coherence_ps)));
        Rng fade(derive_seed(net.seed, kFadeStreamTag, (static_cast<std::uint64_t>(key.first) << 32) | key.second, block));
        faded = faded_link(*link_ptr, fade);
        link_ptr = &faded;
    }
    const LinkParams& link = *link_ptr;
    Rng& rng = net.link_rng(tx, rx);
    ReceptionEvent ev;
    ev.window_start_local = window_start_local;
    const double tx_local = rx_clock.local_after(tx_abs_from_now);
    const ReceiveGrid grid{window_start_local, window_len, net.correlator.sample_period};
    const ChannelOutput ch = apply_channel(net.tx_signal, link, tx_local, grid, rng);
    const double full_scale = net.receiver.full_scale_factor * strongest_tap_gain(link);
    const QuantizedStream q = quantize(ch.wave.samples, full_scale);
    const BranchOutputs out = ptt_correlate(q, net.correlator, net.tmpl);
    ev.peak = detect_peak(out, net.threshold(), net.receiver.peak);
    return ev;
}

std::size_t slot_window_len(const Network& net) {
    const std::size_t s = net.correlator.s;
    const std::size_t reach = 2 * net.receiver.guard_ticks * s;
    const auto flight = static_cast<std::size_t>(net.max_flight_ps() / net.correlator.sample_period) + 1;
    return round_up(reach + flight + net.correlator.template_len + s, s);
}

}  // namespace

void Network::advance_to(Ps t) {
    if (t < now) {
        throw std::logic_error("simulation time cannot go backwards");
    }
    const Ps dt = t - now;
    for (auto& n : nodes) {
        n.clock.advance(dt, n.osc_rng);
    }
    now = t;
}

bool Network::has_link(NodeId a, NodeId b) const {
    return link_params.count(link_key(a, b)) != 0;
}

const LinkParams& Network::link(NodeId a, NodeId b) const {
    const auto it = link_params.find(link_key(a, b));
    if (it == link_params.end()) {
        throw ProtocolError("no link between " + nodes.at(a).name + " and " + nodes.at(b).name);
    }
    return it->second;
}

Rng& Network::link_rng(NodeId tx, NodeId rx) {
    const auto key = std::make_pair(tx, rx);
    auto it = link_rngs_.find(key);
    if (it == link_rngs_.end()) {
        it = link_rngs_.emplace(key, Rng(derive_seed(seed, kLinkStreamTag, tx, rx))).first;
    }
    return it->second;
}

NodeId Network::first_master() const {
    for (const auto& n : nodes) {
        if (n.is_master()) {
            return n.id;
        }
    }
    throw ProtocolError("network has no master");
}

Ps Network::max_flight_ps() const {
    Ps m = 0;
    for (const auto& [key, link] : link_params) {
        Ps excess = 0;
        for (const auto& t : link.taps) {
            excess = std::max(excess, t.excess_delay_ps);
        }
        m = std::max(m, propagation_delay(link.distance_m) + excess);
    }
    return m;
}

std::int32_t Network::threshold() const {
    const auto t = static_cast<std::int32_t>(std::llround(receiver.threshold_fraction * static_cast<double>(tmpl.energy())));
    return std::max<std::int32_t>(t, 1);
}

ReceptionEvent receive_timing_signal(Network& net, NodeId tx, NodeId rx, double tx_abs_from_now,
                                     Ps window_start_local, std::size_t window_len) {
    ReceptionEvent ev = receive_with_clock(net, tx, rx, net.nodes.at(rx).clock,
                                           tx_abs_from_now, window_start_local, window_len);
    ev.receiver = rx;
    return ev;
}

RangingResult roundtrip_measure(Network& net, NodeId a, NodeId b, std::size_t repetitions) {
    if (a == b || !net.has_link(a, b) || !net.links(a, b) || !net.links(b, a)) {
        throw ProtocolError("roundtrip_measure: no usable link between " + net.nodes.at(a).name + " and " +
                            net.nodes.at(b).name);
    }
    if (repetitions == 0) {
        throw std::invalid_argument("roundtrip_measure: zero repetitions");
    }
    const Ps tick = net.correlator.sys_clock_period;
    const Ps turnaround = net.protocol.turnaround_ps;
    const std::size_t window = round_up(std::max(net.receiver.ranging_window,
                                                 net.correlator.template_len + 2 * net.correlator.s),
                                        net.correlator.s);

    RangingResult result;
    double sum = 0.0;
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
        net.advance_to(net.now + net.protocol.ranging_interval_ps);

        // (1) A resets its ranging timer and transmits at local 0.
        LocalClock timer_a = net.nodes[a].clock;
        timer_a.reset();
        LocalClock timer_b = net.nodes[b].clock;

        // (2) B detects on its own sample grid, resets, and replies after the turnaround.
        const auto b_now = static_cast<Ps>(std::floor(timer_b.read_local_exact() / static_cast<double>(tick)));
        const Ps window_b = (b_now - 1) * tick;
        const ReceptionEvent at_b =
            receive_with_clock(net, a, b, timer_b, 0.0, window_b, window);
        if (!at_b.peak.detected) {
            ++result.discarded;
            continue;
        }
        const Ps toa_b = toa_from_peak(at_b.peak, timer_b, window_b, net.correlator.s);
        const double reset_abs = timer_b.abs_until(static_cast<double>(toa_b));
        const double reply_abs = reset_abs + static_cast<double>(turnaround) / timer_b.rate();

        // (3) A captures its timer when B's reply is detected.
        const ReceptionEvent at_a =
            receive_with_clock(net, b, a, timer_a, reply_abs, 0, window);
        if (!at_a.peak.detected) {
            ++result.discarded;
            continue;
        }
        const Ps rt = toa_from_peak(at_a.peak, timer_a, 0, net.correlator.s);
        result.round_trips.push_back(rt);
        sum += static_cast<double>(rt);
        ++result.used;
    }

    if (result.discarded * 2 > repetitions) {
        throw ProtocolError("link learning failed between " + net.nodes[a].name + " and " + net.nodes[b].name +
                            ": " + std::to_string(result.discarded) + " of " + std::to_string(repetitions) +
                            " round trips undetected");
    }
    result.pseudo_range_ps = (sum / static_cast<double>(result.used) - static_cast<double>(turnaround)) / 2.0;
    net.nodes[a].diversity_mem[b] = result.pseudo_range_ps;
    net.nodes[b].diversity_mem[a] = result.pseudo_range_ps;
    return result;
}

std::vector<std::pair<std::pair<NodeId, NodeId>, RangingResult>> learn_pseudo_ranges(Network& net) {
    std::vector<std::pair<std::pair<NodeId, NodeId>, RangingResult>> out;
    const auto n = static_cast<NodeId>(net.nodes.size());
    for (NodeId i = 0; i < n; ++i) {
        for (NodeId j = i + 1; j < n; ++j) {
            if (net.links(i, j) && net.links(j, i)) {
                out.emplace_back(std::make_pair(i, j),
                                 roundtrip_measure(net, i, j, net.protocol.ranging_repetitions));
            }
        }
    }
    return out;
}

std::vector<int> assign_tiers(const LinkMatrix& links, const std::vector<NodeId>& masters,
                              std::optional<std::size_t> tier1_cap, const std::vector<std::vector<double>>* snr_db) {
    const std::size_t n = links.size();
    if (masters.empty()) {
        throw ProtocolError("assign_tiers: no masters");
    }
    std::vector<int> tier(n, -1);
    std::vector<bool> is_master(n, false);
    for (NodeId m : masters) {
        if (m >= n) {
            throw ProtocolError("assign_tiers: master id out of range");
        }
        is_master[m] = true;
        tier[m] = 0;
    }

    // Master-adjacent slaves eligible for tier 1.
    std::vector<std::pair<double, NodeId>> candidates;
    for (NodeId j = 0; j < n; ++j) {
        if (is_master[j]) {
            continue;
        }
        double best = -kInf;
        bool adjacent = false;
        for (NodeId m : masters) {
            if (links(m, j)) {
                adjacent = true;
                best = std::max(best, snr_db != nullptr ? (*snr_db)[m][j] : 0.0);
            }
        }
        if (adjacent) {
            candidates.emplace_back(best, j);
        }
    }
    if (tier1_cap && candidates.size() > *tier1_cap) {
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const auto& x, const auto& y) { return x.first > y.first; });
        candidates.resize(*tier1_cap);
    }

    std::deque<NodeId> frontier;
    for (const auto& [snr, j] : candidates) {
        tier[j] = 1;
        frontier.push_back(j);
    }
    while (!frontier.empty()) {
        const NodeId u = frontier.front();
        frontier.pop_front();
        for (NodeId v = 0; v < n; ++v) {
            if (tier[v] == -1 && links(u, v)) {
                tier[v] = tier[u] + 1;
                frontier.push_back(v);
            }
        }
    }

    std::string unreachable;
    for (NodeId j = 0; j < n; ++j) {
        if (tier[j] == -1) {
            unreachable += (unreachable.empty() ? "" : ", ") + std::to_string(j);
        }
    }
    if (!unreachable.empty()) {
        throw ProtocolError("unreachable node(s): " + unreachable);
    }
    return tier;
}

double consensus_offset(const std::map<NodeId, double>& measured, const std::map<NodeId, double>& learned,
                        const std::map<NodeId, double>& weights) {
    if (measured.empty()) {
        throw std::invalid_argument("consensus_offset: empty neighbor set");
    }
    if (measured.size() != learned.size() || measured.size() != weights.size()) {
        throw std::invalid_argument("consensus_offset: neighbor sets differ");
    }
    double wsum = 0.0;
    for (const auto& [k, t] : measured) {
        if (!learned.count(k) || !weights.count(k)) {
            throw std::invalid_argument("consensus_offset: neighbor sets differ");
        }
        wsum += weights.at(k);
    }
    if (!(wsum > 0.0)) {
        throw std::invalid_argument("consensus_offset: weights must sum to a positive value");
    }
    double t_o = 0.0;
    for (const auto& [k, t] : measured) {
        t_o += weights.at(k) / wsum * (t - learned.at(k));
    }
    return t_o;
}

std::int64_t offset_to_ticks(double t_o_ps, Ps tick) {
    return round_half_toward_zero(t_o_ps / static_cast<double>(tick));
}

TdmaSchedule build_schedule(const std::vector<NodeState>& nodes, Ps slot_duration, bool measurement_slot) {
    if (slot_duration <= 0) {
        throw std::invalid_argument("slot duration must be positive");
    }
    TdmaSchedule s;
    s.slot_duration = slot_duration;
    std::vector<NodeId> order(nodes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](NodeId x, NodeId y) { return nodes[x].tier < nodes[y].tier; });
    s.slot_owner = order;
    for (std::size_t i = 0; i < order.size(); ++i) {
        s.slot_of_tier.emplace(nodes[order[i]].tier, i);
    }
    s.has_measurement_slot = measurement_slot;
    s.measurement_slot = order.size();
    return s;
}

void check_schedule(const Network& net, const TdmaSchedule& schedule) {
    if (schedule.slot_owner.size() != net.nodes.size()) {
        throw ProtocolError("schedule has " + std::to_string(schedule.slot_owner.size()) + " transmit slots for " +
                            std::to_string(net.nodes.size()) + " nodes");
    }
    std::set<NodeId> seen;
    int last_tier = 0;
    for (NodeId id : schedule.slot_owner) {
        if (id >= net.nodes.size() || !seen.insert(id).second) {
            throw ProtocolError("schedule lists node " + std::to_string(id) + " twice or out of range");
        }
        const int tier = net.nodes[id].tier;
        if (tier < 0) {
            throw ProtocolError("node " + net.nodes[id].name + " has no tier");
        }
        if (tier < last_tier) {
            throw ProtocolError("schedule slot order disagrees with tier order at node " + net.nodes[id].name);
        }
        last_tier = tier;
    }
    if (schedule.slot_duration <= 0) {
        throw ProtocolError("slot duration must be positive");
    }
}

void start_phase2(Network& net, Ps lead_ps) {
    const NodeId m = net.first_master();
    const LocalClock& clk = net.nodes[m].clock;
    const Ps tick = clk.tick_period();
    const double target = clk.local_after(static_cast<double>(lead_ps));
    net.phase2_epoch_local = static_cast<Ps>(std::ceil(target / static_cast<double>(tick))) * tick;
    net.advance_to(net.now + round_half_away(clk.abs_until(static_cast<double>(net.phase2_epoch_local))));
    net.phase2_start_abs = net.now;
}

std::vector<double> clock_offsets(const Network& net) {
    const NodeId m = net.first_master();
    const double ref = net.nodes[m].clock.read_local_exact() - static_cast<double>(net.nodes[m].tx_shift_ps);
    std::vector<double> out;
    out.reserve(net.nodes.size());
    for (const auto& n : net.nodes) {
        out.push_back(n.clock.read_local_exact() - static_cast<double>(n.tx_shift_ps) - ref);
    }
    return out;
}

std::vector<double> measurement_slot(Network& net, NodeId reference, Ps slot_start_local) {
    if (reference >= net.nodes.size()) {
        throw ProtocolError("measurement slot reference node " + std::to_string(reference) + " does not exist");
    }
    std::vector<double> emission(net.nodes.size());
    for (const auto& n : net.nodes) {
        const double local = static_cast<double>(slot_start_local + n.tx_shift_ps);
        emission[n.id] = static_cast<double>(round_half_away(n.clock.abs_until(local)));
    }
    std::vector<double> out(net.nodes.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = emission[i] - emission[reference];
    }
    return out;
}

namespace {

void apply_correction(Network& net, NodeState& node, CycleLog& log, std::size_t slot) {
    if (node.is_master() || node.pending.empty()) {
        node.pending.clear();
        return;
    }
    std::map<NodeId, double> learned;
    std::map<NodeId, double> weights;
    for (const auto& [k, t] : node.pending) {
        learned[k] = node.diversity_mem.at(k);
        const auto w = node.weights.find(k);
        weights[k] = w == node.weights.end() ? 1.0 : w->second;
    }
    const double t_o = consensus_offset(node.pending, learned, weights);
    node.pending.clear();

    const Ps tick = node.clock.tick_period();
    const std::int64_t ticks = offset_to_ticks(t_o, tick);
    const Ps old_shift = node.tx_shift_ps;
    if (ticks != 0) {
        node.clock.apply_coarse_correction(-ticks);
    }
    if (net.protocol.fine_correction) {
        const double residual = t_o - static_cast<double>(ticks * tick);
        node.tx_shift_ps = round_half_away(residual / static_cast<double>(kFineStepPs)) * kFineStepPs;
    }
    if (ticks != 0 || node.tx_shift_ps != old_shift) {
        log.corrections.push_back(
            CorrectionEvent{log.cycle, slot, node.id, t_o, ticks, node.tx_shift_ps, node.clock.counter()});
    }
}

void record_sample(const Network& net, CycleLog& log) {
    log.samples.push_back(OffsetSample{net.now - net.phase2_start_abs, clock_offsets(net)});
}

}  // namespace

CycleLog run_blink_cycle(Network& net, const TdmaSchedule& schedule, std::int64_t cycle) {
    check_schedule(net, schedule);
    CycleLog log;
    log.cycle = cycle;

    const NodeId master = net.first_master();
    const Ps tick = net.correlator.sys_clock_period;
    const std::size_t window_len = slot_window_len(net);
    const Ps cycle_start = net.phase2_epoch_local + cycle * schedule.cycle_length();

    for (std::size_t slot = 0; slot < schedule.slot_owner.size(); ++slot) {
        const Ps slot_start = cycle_start + static_cast<Ps>(slot) * schedule.slot_duration;
        const double until = net.nodes[master].clock.abs_until(static_cast<double>(slot_start));
        net.advance_to(net.now + std::max<Ps>(0, round_half_away(until)));

        NodeState& owner = net.nodes[schedule.slot_owner[slot]];
        apply_correction(net, owner, log, slot);
        record_sample(net, log);

        SlotEvent ev;
        ev.cycle = cycle;
        ev.slot = slot;
        ev.transmitter = owner.id;
        const double tx_from_now = owner.clock.abs_until(static_cast<double>(slot_start + owner.tx_shift_ps));
        ev.tx_abs_ps = net.now + round_half_away(tx_from_now);

        const Ps window_start = slot_start - static_cast<Ps>(net.receiver.guard_ticks) * tick;
        for (NodeId rx : net.links.neighbors(owner.id)) {
            ReceptionEvent rec = receive_timing_signal(net, owner.id, rx, tx_from_now, window_start, window_len);
            if (rec.peak.detected) {
                const Ps toa = toa_from_peak(rec.peak, net.nodes[rx].clock, window_start, net.correlator.s);
                rec.toa_rel_ps = static_cast<double>(toa - slot_start);
                NodeState& r = net.nodes[rx];
                if (!r.is_master() && r.diversity_mem.count(owner.id)) {
                    r.pending[owner.id] = *rec.toa_rel_ps;
                }
            }
            ev.receptions.push_back(rec);
        }
        log.slots.push_back(std::move(ev));
    }

    if (schedule.has_measurement_slot) {
        const Ps slot_start = cycle_start + static_cast<Ps>(schedule.measurement_slot) * schedule.slot_duration;
        const double until = net.nodes[master].clock.abs_until(static_cast<double>(slot_start));
        net.advance_to(net.now + std::max<Ps>(0, round_half_away(until)));
        record_sample(net, log);
        log.measurement_offsets_ps = measurement_slot(net, master, slot_start);
    }
    return log;
}

}  // namespace blink
