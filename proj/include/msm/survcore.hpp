#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msm/dataio.hpp"

namespace msm::survcore {

enum class ConfType { plain, log, loglog };

ConfType parse_conf_type(const std::string& name);
const char* to_string(ConfType type);

struct SurvPoint {
  double time = 0.0;
  double n_risk = 0.0;
  double n_event = 0.0;
  double surv = 1.0;
  double se = 0.0;  // NaN once the estimate reaches 0
  double lower = 1.0;
  double upper = 1.0;
};

struct SurvCurve {
  std::optional<std::string> group;
  std::size_t n = 0;
  std::vector<SurvPoint> points;  // distinct event times only
  bool no_events = false;

  // Right-continuous value; 1 before the first event.
  double at(double t) const;
};

struct KmOptions {
  std::optional<std::string> group_by;
  double conf_level = 0.95;
  ConfType conf_type = ConfType::log;
};

SurvCurve km_curve(std::span<const double> time, std::span<const int> status, double conf_level = 0.95,
                   ConfType conf_type = ConfType::log);

std::vector<SurvCurve> kaplan_meier(const dataio::SurvivalData& data, const KmOptions& options = {});

// A survival step function: surv[k] holds on [times[k], times[k+1]).
struct StepFunction {
  std::vector<double> times;
  std::vector<double> values;
  double initial = 1.0;

  double at(double t) const;
};

// Product-limit estimate over distinct event times.
StepFunction product_limit(std::span<const double> time, std::span<const int> status);

// Product-limit estimate with per-observation event weights m_i in [0, 1]:
// S(t) = prod_{i: t_(i) <= t} (1 - m_(i) / (n - i + 1)), observations ordered
// by time with events before censorings. With m = status this is the usual
// estimate.
StepFunction weighted_product_limit(std::span<const double> time, std::span<const double> event_weight,
                                    std::span<const int> tie_order);

// Group codes for a column: categorical columns use their level order,
// numeric columns their sorted distinct values. Missing values get -1.
struct Factor {
  std::vector<int> codes;
  std::vector<std::string> labels;
};
Factor factor_of(const dataio::Dataset& data, const std::string& column);

struct RankGroup {
  std::string label;
  std::size_t n = 0;
  double observed = 0.0;
  double expected = 0.0;
};

struct RankTestResult {
  std::vector<RankGroup> groups;
  double chi_squared = 0.0;
  int df = 0;
  double p_value = 1.0;
  double rho = 0.0;
};

RankTestResult rank_test(std::span<const double> time, std::span<const int> status, std::span<const int> group,
                         const std::vector<std::string>& labels, double rho = 0.0);

RankTestResult rank_test(const dataio::SurvivalData& data, const std::string& group_by, double rho = 0.0);

}  // namespace msm::survcore
