#include "blink/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

namespace blink {

namespace {

constexpr std::uint64_t kInitStreamTag = 0x494e4954;  // "INIT"
constexpr std::uint64_t kOscStreamTag = 0x4f534349;   // "OSCI"
constexpr std::int64_t kInitialCounter = 1'000'000;

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
        out += (out.empty() ? "" : "; ") + p;
    }
    return out;
}

std::map<std::string, NodeId> name_index(const ScenarioConfig& cfg) {
    std::map<std::string, NodeId> idx;
    for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
        idx.emplace(cfg.nodes[i].name, static_cast<NodeId>(i));
    }
    return idx;
}

LinkParams link_params_of(const ScenarioConfig& cfg, const LinkSpec& spec) {
    LinkParams p;
    p.distance_m = spec.distance_m;
    p.snr_db = cfg.noiseless ? kInf : spec.snr_db;
    p.los = spec.los;
    if (!spec.taps.empty()) {
        p.taps = spec.taps;
    } else if (spec.los) {
        p.taps = {Tap{0, 1.0}};
    } else {
        p.taps = nlos_taps(cfg.nlos);
        p.coherence_ps = cfg.noiseless ? 0 : cfg.nlos.coherence_ps;
    }
    return p;
}

std::vector<std::vector<double>> snr_matrix(const ScenarioConfig& cfg, const std::map<std::string, NodeId>& idx) {
    const std::size_t n = cfg.nodes.size();
    std::vector<std::vector<double>> snr(n, std::vector<double>(n, -kInf));
    for (const auto& l : cfg.links) {
        const auto a = idx.find(l.a);
        const auto b = idx.find(l.b);
        if (a == idx.end() || b == idx.end() || a->second == b->second) {
            continue;
        }
        const double v = cfg.noiseless ? kInf : l.snr_db;
        snr[a->second][b->second] = v;
        snr[b->second][a->second] = v;
    }
    return snr;
}

}  // namespace

ScenarioError::ScenarioError(std::vector<std::string> problems)
    : std::runtime_error("invalid scenario: " + join(problems)), problems_(std::move(problems)) {}

const NodeOffsetStats& OffsetStats::at(const std::string& name) const {
    for (const auto& n : nodes) {
        if (n.name == name) {
            return n;
        }
    }
    throw std::out_of_range("no offset statistics for node " + name);
}

std::vector<std::string> validate(const ScenarioConfig& cfg) {
    std::vector<std::string> errs;
    if (cfg.schema_version != kScenarioSchemaVersion) {
        errs.push_back("schema_version: expected " + std::to_string(kScenarioSchemaVersion) + ", got " +
                       std::to_string(cfg.schema_version));
    }
    if (!cfg.seed) {
        errs.push_back("seed: required");
    }
    if (cfg.nodes.empty()) {
        errs.push_back("nodes: at least one node required");
    }

    std::map<std::string, std::size_t> first_def;
    std::size_t masters = 0;
    for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
        const auto& n = cfg.nodes[i];
        const std::string path = "nodes[" + std::to_string(i) + "]";
        if (n.name.empty()) {
            errs.push_back(path + ".name: empty");
        }
        const auto [it, fresh] = first_def.emplace(n.name, i);
        if (!fresh) {
            errs.push_back(path + ".name: duplicate node id '" + n.name + "' (also defined at nodes[" +
                           std::to_string(it->second) + "])");
        }
        if (n.role == Role::Master) {
            ++masters;
        }
        try {
            n.osc.validate(cfg.ppm_bound);
        } catch (const std::exception& e) {
            errs.push_back(path + ".oscillator: " + e.what());
        }
    }
    if (!cfg.nodes.empty() && masters == 0) {
        errs.push_back("nodes: at least one master required");
    }

    std::set<std::pair<std::string, std::string>> seen_links;
    for (std::size_t i = 0; i < cfg.links.size(); ++i) {
        const auto& l = cfg.links[i];
        const std::string path = "links[" + std::to_string(i) + "]";
        for (const auto* end : {&l.a, &l.b}) {
            if (!first_def.count(*end)) {
                errs.push_back(path + ": unknown node '" + *end + "'");
            }
        }
        if (l.a == l.b) {
            errs.push_back(path + ": link from a node to itself");
        }
        if (!(l.distance_m > 0.0) || !std::isfinite(l.distance_m)) {
            errs.push_back(path + ".distance_m: must be positive, got " + std::to_string(l.distance_m));
        }
        if (std::isnan(l.snr_db)) {
            errs.push_back(path + ".snr_db: not a number");
        }
        if (l.weight && !(*l.weight > 0.0)) {
            errs.push_back(path + ".weight: must be positive");
        }
        const auto key = std::minmax(l.a, l.b);
        if (!seen_links.insert({key.first, key.second}).second) {
            errs.push_back(path + ": duplicate link " + l.a + "-" + l.b);
        }
        try {
            LinkParams p = link_params_of(cfg, l);
            p.distance_m = std::max(p.distance_m, 0.0);
            p.validate();
        } catch (const std::exception& e) {
            errs.push_back(path + ".taps: " + e.what());
        }
    }

    if (cfg.slot_duration_ps <= 0) {
        errs.push_back("schedule.slot_duration_ps: must be positive");
    }
    if (cfg.measurements == 0) {
        errs.push_back("measurements: must be at least 1");
    }
    if (cfg.sigma_tol_ps <= 0) {
        errs.push_back("sigma_tol_ps: must be positive");
    }
    if (cfg.initial_offset_max_ticks < 0) {
        errs.push_back("initial_offset_max_ticks: must be non-negative");
    }
    if (!(cfg.master_weight > 0.0)) {
        errs.push_back("master_weight: must be positive");
    }
    if (!(cfg.receiver.threshold_fraction > 0.0 && cfg.receiver.threshold_fraction <= 1.0)) {
        errs.push_back("receiver.threshold_fraction: must be in (0, 1]");
    }
    if (!(cfg.receiver.full_scale_factor > 0.0)) {
        errs.push_back("receiver.full_scale_factor: must be positive");
    }
    if (cfg.receiver.guard_ticks == 0) {
        errs.push_back("receiver.guard_ticks: must be positive");
    }
    if (cfg.protocol.ranging_repetitions == 0) {
        errs.push_back("protocol.ranging_repetitions: must be positive");
    }
    if (cfg.protocol.turnaround_ps < 0) {
        errs.push_back("protocol.turnaround_ps: must be non-negative");
    }
    if (cfg.slot_duration_ps > 0) {
        const Ps window = static_cast<Ps>(2 * cfg.receiver.guard_ticks + 40) * kTickPeriodPs;
        if (window > cfg.slot_duration_ps) {
            errs.push_back("schedule.slot_duration_ps: shorter than the receive window (" + std::to_string(window) +
                           " ps)");
        }
    }
    if (!cfg.reference.empty() && !first_def.count(cfg.reference)) {
        errs.push_back("reference: unknown node '" + cfg.reference + "'");
    }
    if (cfg.reference.empty()) {
        errs.push_back("reference: required");
    }
    if (!cfg.pulse_csv.empty() && !std::filesystem::exists(cfg.pulse_csv)) {
        errs.push_back("pulse_csv: file not found: " + cfg.pulse_csv);
    }

    // Duplicate names resolve to their first definition.
    if (masters > 0) {
        const auto idx = name_index(cfg);
        const LinkMatrix m = build_link_matrix(snr_matrix(cfg, idx), cfg.gamma_th_db);
        std::vector<NodeId> master_ids;
        for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
            if (cfg.nodes[i].role == Role::Master) {
                master_ids.push_back(static_cast<NodeId>(i));
            }
        }
        std::vector<bool> reached(cfg.nodes.size(), false);
        std::vector<NodeId> stack(master_ids);
        for (NodeId mid : master_ids) {
            reached[mid] = true;
        }
        while (!stack.empty()) {
            const NodeId u = stack.back();
            stack.pop_back();
            for (NodeId v : m.neighbors(u)) {
                if (!reached[v]) {
                    reached[v] = true;
                    stack.push_back(v);
                }
            }
        }
        for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
            if (!reached[i]) {
                errs.push_back("nodes[" + std::to_string(i) + "]: unreachable node '" + cfg.nodes[i].name +
                               "' (no path of links with snr >= gamma_th_db to a master)");
            }
        }
    }
    return errs;
}

Network build_network(const ScenarioConfig& cfg) {
    if (auto errs = validate(cfg); !errs.empty()) {
        throw ScenarioError(std::move(errs));
    }
    const std::uint64_t seed = *cfg.seed;
    const auto idx = name_index(cfg);
    Network net;
    net.seed = seed;
    net.receiver = cfg.receiver;
    net.protocol = cfg.protocol;
    net.protocol.fine_correction = cfg.fine_correction;

    Rng init(derive_seed(seed, kInitStreamTag));
    const std::int64_t bound = cfg.initial_offset_max_ticks;
    for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
        const auto& spec = cfg.nodes[i];
        OscillatorModel osc = spec.osc;
        if (cfg.noiseless) {
            osc.freq_walk_std = 0.0;
            osc.phase_jitter_std_ps = 0.0;
        }
        NodeState node;
        node.id = static_cast<NodeId>(i);
        node.name = spec.name;
        node.role = spec.role;
        node.clock = LocalClock(node.id, osc);
        node.osc_rng = Rng(derive_seed(seed, kOscStreamTag, i));

        const double phase = init.uniform(0.0, static_cast<double>(kTickPeriodPs));
        const std::int64_t drawn = init.uniform_int(-bound, bound);
        std::int64_t offset = 0;
        if (spec.role == Role::Slave) {
            offset = spec.initial_offset_ticks.value_or(drawn);
        }
        node.clock.set_state(kInitialCounter + offset, cfg.initial_phase == InitialPhase::Random ? phase : 0.0);
        net.nodes.push_back(std::move(node));
    }

    for (const auto& l : cfg.links) {
        const NodeId a = idx.at(l.a);
        const NodeId b = idx.at(l.b);
        net.link_params[{std::min(a, b), std::max(a, b)}] = link_params_of(cfg, l);
    }
    const auto snr = snr_matrix(cfg, idx);
    net.links = build_link_matrix(snr, cfg.gamma_th_db);

    std::vector<NodeId> masters;
    for (const auto& n : net.nodes) {
        if (n.is_master()) {
            masters.push_back(n.id);
        }
    }
    const auto tiers = assign_tiers(net.links, masters, cfg.tier1_cap, &snr);
    for (auto& n : net.nodes) {
        n.tier = tiers[n.id];
    }

    for (const auto& l : cfg.links) {
        const NodeId a = idx.at(l.a);
        const NodeId b = idx.at(l.b);
        const double w = l.weight.value_or(1.0);
        if (net.links(a, b)) {
            net.nodes[a].weights[b] = w * (net.nodes[b].is_master() ? cfg.master_weight : 1.0);
        }
        if (net.links(b, a)) {
            net.nodes[b].weights[a] = w * (net.nodes[a].is_master() ? cfg.master_weight : 1.0);
        }
    }

    SampledWaveform pulse = monocycle();
    if (!cfg.pulse_csv.empty()) {
        std::ifstream in(cfg.pulse_csv);
        pulse = read_waveform_csv(in);
    }
    net.tx_signal = modulate(gen_msequence(), pulse);
    net.tmpl = make_template(net.tx_signal);
    net.correlator.template_len = net.tmpl.length();
    net.correlator.validate();
    return net;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    Network net = build_network(cfg);
    ScenarioResult result;
    result.config = cfg;
    for (const auto& n : net.nodes) {
        result.node_names.push_back(n.name);
        result.tiers.push_back(n.tier);
    }
    result.ranging = learn_pseudo_ranges(net);

    const TdmaSchedule schedule = build_schedule(net.nodes, cfg.slot_duration_ps);
    result.cycle_length_ps = schedule.cycle_length();
    start_phase2(net);

    const auto idx = name_index(cfg);
    const NodeId reference = idx.at(cfg.reference);
    const auto cycles = static_cast<std::int64_t>(cfg.cycles());
    for (std::int64_t c = 0; c < cycles; ++c) {
        CycleLog log = run_blink_cycle(net, schedule, c);
        result.samples.insert(result.samples.end(), log.samples.begin(), log.samples.end());
        if (c >= static_cast<std::int64_t>(cfg.warmup_cycles)) {
            std::vector<double> row(log.measurement_offsets_ps.size());
            for (std::size_t i = 0; i < row.size(); ++i) {
                row[i] = log.measurement_offsets_ps[i] - log.measurement_offsets_ps[reference];
            }
            result.measured_cycles.push_back(c);
            result.measurement_offsets.push_back(std::move(row));
        }
        if (cfg.keep_trace) {
            result.trace.push_back(std::move(log));
        }
    }

    result.stats = offset_statistics(result.measurement_offsets, result.node_names, reference);
    std::vector<bool> is_slave;
    for (const auto& n : net.nodes) {
        is_slave.push_back(!n.is_master());
    }
    result.convergence_time_ps = convergence_time(result.samples, is_slave, cfg.sigma_tol_ps);
    return result;
}

std::optional<Ps> convergence_time(const std::vector<OffsetSample>& samples, const std::vector<bool>& is_slave,
                                   Ps sigma_tol) {
    const auto tol = static_cast<double>(sigma_tol);
    for (const auto& s : samples) {
        bool ok = true;
        for (std::size_t i = 0; i < s.offsets_ps.size() && ok; ++i) {
            ok = !(i < is_slave.size() && is_slave[i]) || std::abs(s.offsets_ps[i]) <= tol;
        }
        if (ok) {
            return s.time_since_phase2;
        }
    }
    return std::nullopt;
}

double sample_mean(const std::vector<double>& xs) {
    if (xs.empty()) {
        throw std::invalid_argument("mean of an empty series");
    }
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
    if (xs.empty()) {
        throw std::invalid_argument("std of an empty series");
    }
    if (xs.size() == 1) {
        return 0.0;
    }
    const double m = sample_mean(xs);
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - m) * (x - m);
    }
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

OffsetStats offset_statistics(const std::vector<std::vector<double>>& per_sample_offsets,
                              const std::vector<std::string>& names, NodeId reference) {
    if (per_sample_offsets.empty()) {
        throw std::invalid_argument("offset_statistics: empty series");
    }
    if (reference >= names.size()) {
        throw std::invalid_argument("offset_statistics: reference out of range");
    }
    OffsetStats stats;
    stats.reference = names[reference];
    for (NodeId i = 0; i < names.size(); ++i) {
        if (i == reference) {
            continue;
        }
        std::vector<double> series;
        series.reserve(per_sample_offsets.size());
        for (const auto& row : per_sample_offsets) {
            if (row.size() != names.size()) {
                throw std::invalid_argument("offset_statistics: ragged sample row");
            }
            series.push_back(row[i] - row[reference]);
        }
        stats.nodes.push_back(NodeOffsetStats{names[i], i, sample_mean(series), sample_std(series), series.size()});
    }
    return stats;
}

BeamformResult beamform_sum(const std::vector<double>& emission_offsets_ps, const std::vector<double>& distances_m,
                            Ps pulse_width_ps) {
    if (emission_offsets_ps.empty() || emission_offsets_ps.size() != distances_m.size()) {
        throw std::invalid_argument("beamform_sum: need one distance per emitting node");
    }
    BeamformResult r;
    std::vector<double> arrivals;
    for (std::size_t i = 0; i < distances_m.size(); ++i) {
        if (std::abs(distances_m[i] - distances_m.front()) > 1e-3) {
            r.equidistant = false;
        }
        arrivals.push_back(emission_offsets_ps[i] + distances_m[i] / kSpeedOfLight * 1e12);
    }
    const auto sum_at = [&](double t) {
        double s = 0.0;
        for (double a : arrivals) {
            s += pulse_shape(t - a, pulse_width_ps);
        }
        return std::abs(s);
    };
    const auto [lo_it, hi_it] = std::minmax_element(arrivals.begin(), arrivals.end());
    const double lo = *lo_it - static_cast<double>(pulse_width_ps);
    const double hi = *hi_it + static_cast<double>(pulse_width_ps);
    double peak = 0.0;
    for (double t = lo; t <= hi; t += 1.0) {
        peak = std::max(peak, sum_at(t));
    }
    for (double a : arrivals) {
        peak = std::max(peak, sum_at(a));
    }
    r.gain = peak / pulse_shape(0.0, pulse_width_ps);
    return r;
}

}  // namespace blink
