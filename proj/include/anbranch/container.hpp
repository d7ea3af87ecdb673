#pragma once

// JSON documents: the compiled-program container, campaign reports and run
// results.

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "anbranch/faultsim.hpp"
#include "anbranch/instrument.hpp"
#include "anbranch/vm.hpp"

namespace anb::io {

using nlohmann::json;

json to_json(const cfi::CfiMeta& meta);
cfi::CfiMeta meta_from_json(const json& j);

json to_json(const inst::AnReport& report);
inst::AnReport report_from_json(const json& j);

json to_json(const inst::CostReport& costs);
inst::CostReport costs_from_json(const json& j);

/// The whole compile result: pipeline configuration, parameters, source and
/// output program text, CFI metadata, AN report, protected branches and costs.
json to_json(const inst::CompiledProgram& c);
/// Throws ParseError or std::invalid_argument on a malformed container.
inst::CompiledProgram container_from_json(const json& j);

json to_json(const vm::ExecResult& r, bool with_trace = false);

/// {config, counts, total, sdc_rate, wilson_ci, seed}. The worker count is
/// not echoed, so reports compare byte for byte across --jobs.
json to_json(const fault::CampaignResult& r, std::string_view mode);
json counts_json(const fault::OutcomeCounts& c);

/// One header line and one line per report, same fields as the JSON form.
std::string campaign_csv(const std::vector<json>& reports);

}  // namespace anb::io
