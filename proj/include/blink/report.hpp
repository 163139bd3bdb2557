#pragma once

#include "blink/simkit.hpp"

#include <json.hpp>

#include <string>

namespace blink {

nlohmann::json summary_json(const ScenarioResult& result);

/// Fixed-width per-node table in nanoseconds.
std::string summary_table(const ScenarioResult& result);

/// `cycle,node,offset_ps` rows, one per measured cycle and node, reference included.
std::string offsets_csv(const ScenarioResult& result);

/// One JSON object per slot: transmitter, receptions with peak reports, and the
/// corrections applied at that slot boundary.
std::string trace_jsonl(const ScenarioResult& result);

}  // namespace blink
