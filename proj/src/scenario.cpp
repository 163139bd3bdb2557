#include "blink/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>
#include <type_traits>

namespace blink {

using nlohmann::json;

namespace {

// Field reader that records problems instead of throwing and flags unknown keys.
class Reader {
public:
    Reader(const json& obj, std::string path, std::vector<std::string>& errs)
        : obj_(obj), path_(std::move(path)), errs_(errs) {
        if (!obj_.is_object()) {
            errs_.push_back(where() + ": expected an object");
        }
    }

    template <class T>
    bool get(const std::string& key, T& out, bool required = false) {
        seen_.insert(key);
        if (!obj_.is_object() || !obj_.contains(key) || obj_.at(key).is_null()) {
            if (required) {
                errs_.push_back(field(key) + ": required");
            }
            return false;
        }
        const json& v = obj_.at(key);
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) {
                return mismatch(key, "a boolean");
            }
            out = v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) {
                return mismatch(key, "a string");
            }
            out = v.get<std::string>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "infinity")) {
                out = kInf;
                return true;
            }
            if (!v.is_number()) {
                return mismatch(key, "a number");
            }
            out = v.get<T>();
        } else if constexpr (std::is_unsigned_v<T>) {
            if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
                return mismatch(key, "a non-negative integer");
            }
            out = v.get<T>();
        } else {
            if (!v.is_number_integer()) {
                return mismatch(key, "an integer");
            }
            out = v.get<T>();
        }
        return true;
    }

    template <class T>
    bool require(const std::string& key, T& out) {
        return get(key, out, true);
    }

    const json* child(const std::string& key) {
        seen_.insert(key);
        if (!obj_.is_object() || !obj_.contains(key) || obj_.at(key).is_null()) {
            return nullptr;
        }
        return &obj_.at(key);
    }

    [[nodiscard]] std::string field(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    void finish() {
        if (!obj_.is_object()) {
            return;
        }
        for (const auto& [key, value] : obj_.items()) {
            if (!seen_.count(key)) {
                errs_.push_back(field(key) + ": unknown field");
            }
        }
    }

private:
    bool mismatch(const std::string& key, const char* what) {
        errs_.push_back(field(key) + ": expected " + what);
        return false;
    }
    [[nodiscard]] std::string where() const { return path_.empty() ? "<root>" : path_; }

    const json& obj_;
    std::string path_;
    std::vector<std::string>& errs_;
    std::set<std::string> seen_;
};

std::vector<Tap> read_taps(const json& arr, const std::string& path, std::vector<std::string>& errs) {
    std::vector<Tap> taps;
    if (!arr.is_array()) {
        errs.push_back(path + ": expected an array");
        return taps;
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
        Reader r(arr[i], path + "[" + std::to_string(i) + "]", errs);
        Tap t;
        r.require("excess_delay_ps", t.excess_delay_ps);
        r.require("gain", t.relative_gain);
        r.finish();
        taps.push_back(t);
    }
    return taps;
}

json taps_to_json(const std::vector<Tap>& taps) {
    json arr = json::array();
    for (const auto& t : taps) {
        arr.push_back({{"excess_delay_ps", t.excess_delay_ps}, {"gain", t.relative_gain}});
    }
    return arr;
}

json number_or_inf(double v) {
    if (std::isinf(v)) {
        return "inf";
    }
    return v;
}

}  // namespace

ScenarioConfig scenario_from_json(const json& doc, std::vector<std::string>& errors) {
    ScenarioConfig cfg;
    Reader root(doc, "", errors);
    if (root.require("schema_version", cfg.schema_version) && cfg.schema_version != kScenarioSchemaVersion) {
        errors.push_back("schema_version: unsupported version " + std::to_string(cfg.schema_version) +
                         " (expected " + std::to_string(kScenarioSchemaVersion) + ")");
    }
    root.get("name", cfg.name);
    std::uint64_t seed = 0;
    if (root.get("seed", seed)) {
        cfg.seed = seed;
    }
    root.get("gamma_th_db", cfg.gamma_th_db);
    root.get("ppm_bound", cfg.ppm_bound);
    root.require("reference", cfg.reference);
    root.get("measurements", cfg.measurements);
    root.get("warmup_cycles", cfg.warmup_cycles);
    root.get("sigma_tol_ps", cfg.sigma_tol_ps);
    root.get("fine_correction", cfg.fine_correction);
    root.get("noiseless", cfg.noiseless);
    root.get("initial_offset_max_ticks", cfg.initial_offset_max_ticks);
    root.get("master_weight", cfg.master_weight);
    root.get("pulse_csv", cfg.pulse_csv);
    std::size_t cap = 0;
    if (root.get("tier1_cap", cap)) {
        cfg.tier1_cap = cap;
    }
    std::string phase = "random";
    if (root.get("initial_phase", phase)) {
        if (phase == "random") {
            cfg.initial_phase = InitialPhase::Random;
        } else if (phase == "aligned") {
            cfg.initial_phase = InitialPhase::Aligned;
        } else {
            errors.push_back("initial_phase: expected \"random\" or \"aligned\", got \"" + phase + "\"");
        }
    }

    if (const json* s = root.child("schedule")) {
        Reader r(*s, "schedule", errors);
        r.get("slot_duration_ps", cfg.slot_duration_ps);
        r.finish();
    }
    if (const json* s = root.child("receiver")) {
        Reader r(*s, "receiver", errors);
        r.get("threshold_fraction", cfg.receiver.threshold_fraction);
        r.get("full_scale_factor", cfg.receiver.full_scale_factor);
        r.get("guard_ticks", cfg.receiver.guard_ticks);
        r.get("ranging_window", cfg.receiver.ranging_window);
        r.get("guard_cycles", cfg.receiver.peak.guard_cycles);
        std::string mode;
        if (r.get("peak_search", mode)) {
            if (mode == "guarded_max") {
                cfg.receiver.peak.mode = PeakSearch::GuardedMax;
            } else if (mode == "first_crossing") {
                cfg.receiver.peak.mode = PeakSearch::FirstCrossing;
            } else {
                errors.push_back("receiver.peak_search: expected \"guarded_max\" or \"first_crossing\"");
            }
        }
        r.finish();
    }
    if (const json* s = root.child("protocol")) {
        Reader r(*s, "protocol", errors);
        r.get("ranging_repetitions", cfg.protocol.ranging_repetitions);
        r.get("ranging_interval_ps", cfg.protocol.ranging_interval_ps);
        r.get("turnaround_ps", cfg.protocol.turnaround_ps);
        r.finish();
    }
    if (const json* s = root.child("nlos")) {
        Reader r(*s, "nlos", errors);
        r.get("direct_attenuation_db", cfg.nlos.direct_attenuation_db);
        r.get("coherence_ps", cfg.nlos.coherence_ps);
        if (const json* e = r.child("echoes")) {
            cfg.nlos.echoes = read_taps(*e, "nlos.echoes", errors);
        }
        r.finish();
    }

    if (const json* nodes = root.child("nodes"); nodes && nodes->is_array()) {
        for (std::size_t i = 0; i < nodes->size(); ++i) {
            Reader r((*nodes)[i], "nodes[" + std::to_string(i) + "]", errors);
            NodeSpec n;
            r.require("name", n.name);
            std::string role;
            if (r.require("role", role)) {
                if (role == "master") {
                    n.role = Role::Master;
                } else if (role == "slave") {
                    n.role = Role::Slave;
                } else {
                    errors.push_back(r.field("role") + ": expected \"master\" or \"slave\"");
                }
            }
            r.get("ppm", n.osc.ppm_offset);
            r.get("nominal_freq_hz", n.osc.nominal_freq_hz);
            r.get("freq_walk_std", n.osc.freq_walk_std);
            r.get("phase_jitter_ps", n.osc.phase_jitter_std_ps);
            std::int64_t off = 0;
            if (r.get("initial_offset_ticks", off)) {
                n.initial_offset_ticks = off;
            }
            r.finish();
            cfg.nodes.push_back(std::move(n));
        }
    } else {
        errors.push_back("nodes: required array");
    }

    if (const json* links = root.child("links"); links && links->is_array()) {
        for (std::size_t i = 0; i < links->size(); ++i) {
            const std::string path = "links[" + std::to_string(i) + "]";
            Reader r((*links)[i], path, errors);
            LinkSpec l;
            r.require("a", l.a);
            r.require("b", l.b);
            r.require("distance_m", l.distance_m);
            r.require("snr_db", l.snr_db);
            r.get("los", l.los);
            double w = 0.0;
            if (r.get("weight", w)) {
                l.weight = w;
            }
            if (const json* t = r.child("taps")) {
                l.taps = read_taps(*t, path + ".taps", errors);
            }
            r.finish();
            cfg.links.push_back(std::move(l));
        }
    } else {
        errors.push_back("links: required array");
    }
    root.child("comment");
    root.finish();
    return cfg;
}

json scenario_to_json(const ScenarioConfig& cfg) {
    json doc;
    doc["schema_version"] = cfg.schema_version;
    doc["name"] = cfg.name;
    if (cfg.seed) {
        doc["seed"] = *cfg.seed;
    }
    doc["gamma_th_db"] = cfg.gamma_th_db;
    doc["ppm_bound"] = cfg.ppm_bound;
    doc["reference"] = cfg.reference;
    doc["measurements"] = cfg.measurements;
    doc["warmup_cycles"] = cfg.warmup_cycles;
    doc["sigma_tol_ps"] = cfg.sigma_tol_ps;
    doc["fine_correction"] = cfg.fine_correction;
    doc["noiseless"] = cfg.noiseless;
    doc["initial_offset_max_ticks"] = cfg.initial_offset_max_ticks;
    doc["initial_phase"] = cfg.initial_phase == InitialPhase::Random ? "random" : "aligned";
    doc["master_weight"] = cfg.master_weight;
    if (cfg.tier1_cap) {
        doc["tier1_cap"] = *cfg.tier1_cap;
    }
    if (!cfg.pulse_csv.empty()) {
        doc["pulse_csv"] = cfg.pulse_csv;
    }
    doc["schedule"] = {{"slot_duration_ps", cfg.slot_duration_ps}};
    doc["receiver"] = {
        {"threshold_fraction", cfg.receiver.threshold_fraction},
        {"full_scale_factor", cfg.receiver.full_scale_factor},
        {"guard_ticks", cfg.receiver.guard_ticks},
        {"ranging_window", cfg.receiver.ranging_window},
        {"guard_cycles", cfg.receiver.peak.guard_cycles},
        {"peak_search", cfg.receiver.peak.mode == PeakSearch::GuardedMax ? "guarded_max" : "first_crossing"},
    };
    doc["protocol"] = {
        {"ranging_repetitions", cfg.protocol.ranging_repetitions},
        {"ranging_interval_ps", cfg.protocol.ranging_interval_ps},
        {"turnaround_ps", cfg.protocol.turnaround_ps},
    };
    doc["nlos"] = {{"direct_attenuation_db", cfg.nlos.direct_attenuation_db},
                   {"coherence_ps", cfg.nlos.coherence_ps},
                   {"echoes", taps_to_json(cfg.nlos.echoes)}};
    json nodes = json::array();
    for (const auto& n : cfg.nodes) {
        json jn = {{"name", n.name},
                   {"role", n.role == Role::Master ? "master" : "slave"},
                   {"ppm", n.osc.ppm_offset},
                   {"nominal_freq_hz", n.osc.nominal_freq_hz},
                   {"freq_walk_std", n.osc.freq_walk_std},
                   {"phase_jitter_ps", n.osc.phase_jitter_std_ps}};
        if (n.initial_offset_ticks) {
            jn["initial_offset_ticks"] = *n.initial_offset_ticks;
        }
        nodes.push_back(std::move(jn));
    }
    doc["nodes"] = std::move(nodes);
    json links = json::array();
    for (const auto& l : cfg.links) {
        json jl = {{"a", l.a}, {"b", l.b}, {"distance_m", l.distance_m}, {"snr_db", number_or_inf(l.snr_db)},
                   {"los", l.los}};
        if (!l.taps.empty()) {
            jl["taps"] = taps_to_json(l.taps);
        }
        if (l.weight) {
            jl["weight"] = *l.weight;
        }
        links.push_back(std::move(jl));
    }
    doc["links"] = std::move(links);
    return doc;
}

ScenarioValidation validate_scenario(const std::filesystem::path& path) {
    ScenarioValidation out;
    std::ifstream in(path);
    if (!in) {
        out.errors.push_back(path.string() + ": cannot open scenario file");
        return out;
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        out.errors.push_back(path.string() + ": " + e.what());
        return out;
    }
    ScenarioConfig cfg = scenario_from_json(doc, out.errors);
    if (!doc.is_object()) {
        return out;
    }
    // Semantic checks run even after schema errors; a field already reported is skipped.
    auto field = [](const std::string& e) { return e.substr(0, e.find(':')); };
    std::set<std::string> reported;
    for (const auto& e : out.errors) {
        reported.insert(field(e));
    }
    for (auto& e : validate(cfg)) {
        if (!reported.count(field(e))) {
            out.errors.push_back(std::move(e));
        }
    }
    if (out.errors.empty()) {
        out.config = std::move(cfg);
    }
    return out;
}

namespace {

struct Geometry {
    const char* name;
    double master_n0;
    double n0_n2;
    double n2_n1;
};

// Measured inter-node distances (m) of the reference testbed.
constexpr Geometry kGeometries[] = {
    {"indoor-los", 1.0, 1.8, 2.4},
    {"indoor-nlos", 0.9, 1.6, 1.7},
    {"outdoor", 1.9, 3.7, 4.5},
    {"paper-sim", 3.0, 5.4, 7.5},
};

constexpr double kPresetJitterPs = 1400.0;
constexpr double kObstructedLinkWeight = 0.25;

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& g : kGeometries) {
        names.emplace_back(g.name);
    }
    return names;
}

ScenarioConfig preset(const std::string& name) {
    const Geometry* geo = nullptr;
    for (const auto& g : kGeometries) {
        if (name == g.name) {
            geo = &g;
        }
    }
    if (geo == nullptr) {
        throw std::invalid_argument("unknown preset '" + name + "'");
    }

    ScenarioConfig cfg;
    cfg.name = name;
    cfg.seed = 1;
    cfg.reference = "node2";
    cfg.gamma_th_db = 6.0;

    // Crystal errors inside the 50 ppm bound. Jitter, SNR and the weight of
    // the obstructed link are tuning values.
    NodeSpec master{"master", Role::Master, {}, std::nullopt};
    NodeSpec n0{"node0", Role::Slave, {}, std::nullopt};
    NodeSpec n1{"node1", Role::Slave, {}, std::nullopt};
    NodeSpec n2{"node2", Role::Slave, {}, std::nullopt};
    n0.osc.ppm_offset = 21.0;
    n1.osc.ppm_offset = -34.0;
    n2.osc.ppm_offset = 12.0;
    cfg.nodes = {master, n0, n1, n2};
    for (auto& n : cfg.nodes) {
        n.osc.phase_jitter_std_ps = kPresetJitterPs;
    }

    double snr = 30.0;
    bool obstructed = false;
    if (name == "indoor-nlos") {
        obstructed = true;
    } else if (name == "outdoor") {
        snr = 20.0;
    }
    cfg.links = {
        LinkSpec{"master", "node0", geo->master_n0, snr, true, {}, std::nullopt},
        LinkSpec{"node0", "node2", geo->n0_n2, snr, true, {}, std::nullopt},
        LinkSpec{"node2", "node1", geo->n2_n1, snr, !obstructed, {}, std::nullopt},
    };
    if (obstructed) {
        cfg.links.back().weight = kObstructedLinkWeight;
    }
    return cfg;
}

}  // namespace blink
