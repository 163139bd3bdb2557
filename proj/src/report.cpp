#include "blink/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace blink {

using nlohmann::json;

namespace {

json peak_json(const PeakReport& p, std::size_t s) {
    return {{"detected", p.detected},
            {"coarse_cycle", p.coarse_cycle},
            {"branch", p.branch},
            {"lag", p.lag(s)},
            {"value", p.value}};
}

}  // namespace

json summary_json(const ScenarioResult& r) {
    const auto& cfg = r.config;
    json doc;
    doc["scenario"] = cfg.name;
    doc["seed"] = cfg.seed.value_or(0);
    doc["cycles"] = cfg.cycles();
    doc["warmup_cycles"] = cfg.warmup_cycles;
    doc["measurements"] = r.measurement_offsets.size();
    doc["cycle_length_ps"] = r.cycle_length_ps;
    doc["fine_correction"] = cfg.fine_correction;
    doc["noiseless"] = cfg.noiseless;
    doc["sigma_tol_ps"] = cfg.sigma_tol_ps;
    doc["converged"] = r.convergence_time_ps.has_value();
    if (r.convergence_time_ps) {
        doc["convergence_time_ps"] = *r.convergence_time_ps;
        doc["convergence_cycles"] =
            static_cast<double>(*r.convergence_time_ps) / static_cast<double>(r.cycle_length_ps);
    } else {
        doc["convergence_time_ps"] = nullptr;
        doc["convergence_cycles"] = nullptr;
    }

    json nodes = json::array();
    for (std::size_t i = 0; i < r.node_names.size(); ++i) {
        nodes.push_back({{"name", r.node_names[i]}, {"tier", r.tiers[i]}});
    }
    doc["nodes"] = std::move(nodes);

    json ranging = json::array();
    for (const auto& [pair, res] : r.ranging) {
        ranging.push_back({{"a", r.node_names[pair.first]},
                           {"b", r.node_names[pair.second]},
                           {"pseudo_range_ps", res.pseudo_range_ps},
                           {"used", res.used},
                           {"discarded", res.discarded}});
    }
    doc["ranging"] = std::move(ranging);

    json stats = json::array();
    for (const auto& n : r.stats.nodes) {
        stats.push_back({{"name", n.name}, {"mean_ps", n.mean_ps}, {"std_ps", n.std_ps}, {"count", n.count}});
    }
    doc["reference"] = r.stats.reference;
    doc["offsets"] = std::move(stats);
    return doc;
}

std::string summary_table(const ScenarioResult& r) {
    std::ostringstream out;
    char line[160];
    out << "scenario " << r.config.name << "  seed " << r.config.seed.value_or(0) << "  measurements "
        << r.measurement_offsets.size() << "  reference " << r.stats.reference << "\n";
    std::snprintf(line, sizeof line, "%-12s %5s %12s %12s %8s\n", "node", "tier", "mean (ns)", "std (ns)", "count");
    out << line;
    for (const auto& n : r.stats.nodes) {
        std::snprintf(line, sizeof line, "%-12s %5d %12.3f %12.3f %8zu\n", n.name.c_str(), r.tiers[n.id],
                      n.mean_ps / 1000.0, n.std_ps / 1000.0, n.count);
        out << line;
    }
    if (r.convergence_time_ps) {
        std::snprintf(line, sizeof line, "converged after %.1f us (%.2f cycles)\n",
                      static_cast<double>(*r.convergence_time_ps) / 1e6,
                      static_cast<double>(*r.convergence_time_ps) / static_cast<double>(r.cycle_length_ps));
        out << line;
    } else {
        out << "not converged\n";
    }
    return out.str();
}

std::string offsets_csv(const ScenarioResult& r) {
    std::ostringstream out;
    out << "cycle,node,offset_ps\n";
    for (std::size_t m = 0; m < r.measurement_offsets.size(); ++m) {
        const auto& row = r.measurement_offsets[m];
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << r.measured_cycles[m] << ',' << r.node_names[i] << ',' << std::llround(row[i]) << '\n';
        }
    }
    return out.str();
}

std::string trace_jsonl(const ScenarioResult& r) {
    std::ostringstream out;
    const std::size_t s = CorrelatorConfig{}.s;
    for (const auto& log : r.trace) {
        for (const auto& slot : log.slots) {
            json ev;
            ev["cycle"] = slot.cycle;
            ev["slot"] = slot.slot;
            ev["transmitter"] = r.node_names[slot.transmitter];
            ev["tx_abs_ps"] = slot.tx_abs_ps;
            json rx = json::array();
            for (const auto& rec : slot.receptions) {
                json e = {{"receiver", r.node_names[rec.receiver]},
                          {"window_start_local", rec.window_start_local},
                          {"peak", peak_json(rec.peak, s)}};
                e["toa_rel_ps"] = rec.toa_rel_ps ? json(*rec.toa_rel_ps) : json(nullptr);
                rx.push_back(std::move(e));
            }
            ev["receptions"] = std::move(rx);
            json corr = json::array();
            for (const auto& c : log.corrections) {
                if (c.slot != slot.slot) {
                    continue;
                }
                corr.push_back({{"node", r.node_names[c.node]},
                                {"t_o_ps", c.t_o_ps},
                                {"ticks", c.ticks},
                                {"tx_shift_ps", c.tx_shift_ps},
                                {"counter_after", c.counter_after}});
            }
            ev["corrections"] = std::move(corr);
            out << ev.dump() << '\n';
        }
        if (!log.measurement_offsets_ps.empty()) {
            json ev = {{"cycle", log.cycle}, {"slot", "measurement"}};
            json offs = json::object();
            for (std::size_t i = 0; i < log.measurement_offsets_ps.size(); ++i) {
                offs[r.node_names[i]] = log.measurement_offsets_ps[i];
            }
            ev["offsets_ps"] = std::move(offs);
            out << ev.dump() << '\n';
        }
    }
    return out.str();
}

}  // namespace blink
