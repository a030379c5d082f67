#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "msm/dataio.hpp"
#include "msm/msmprob.hpp"

namespace msm::analysis {

using nlohmann::json;

enum class MappingKind { survival, idm, msm };
MappingKind parse_kind(const std::string& name);
const char* to_string(MappingKind kind);

// A dataset bound to a mapping, ready for analysis.
struct Bound {
  MappingKind kind = MappingKind::survival;
  json mapping;  // with defaults resolved
  std::optional<dataio::SurvivalData> survival;
  std::optional<msmprob::Sample> sample;
  json report;
};

// Mapping JSON:
//   survival: {time, status, covariates}
//   idm:      {time1, event1, stime, event, covariates, labels, display_offset}
//   msm:      {labels | n_states, transitions: [[h, j], ...], state_columns: [{time, status}, ...],
//              covariates, priority, display_offset}
Bound bind(const dataio::Dataset& data, MappingKind kind, const json& mapping);

const std::vector<std::string>& analysis_names();
bool is_analysis(const std::string& name);

// Runs one analysis. Returns {analysis, params, result}, where params echoes
// every effective parameter. `fallback_seed` is used when params carry none.
json run(const std::string& name, const Bound& bound, const json& params, std::uint64_t fallback_seed);

// Serialises a result exactly as both front ends emit it.
std::string dump(const json& result);

std::string version();

// A fresh seed for callers that did not supply one. Kept below 2^53 so it
// survives a round trip through JavaScript numbers.
std::uint64_t fresh_seed();

}  // namespace msm::analysis
