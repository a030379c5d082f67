#include <algorithm>
#include <cmath>
#include <limits>

#include "msm/error.hpp"
#include "msm/msmprob.hpp"
#include "msm/stats.hpp"
#include "msm/survcore.hpp"

namespace msm::msmprob {

namespace {

// Cause of leaving state 1: 2 (illness), 3 (direct death) or 0 (censored).
int cause(const dataio::IdmData& d, std::size_t i) {
  if (d.event1[i] == 1) return 2;
  if (d.event[i] == 1) return 3;
  return 0;
}

// Left limit of a step function at t.
double left_limit(const survcore::StepFunction& f, double t) {
  auto it = std::lower_bound(f.times.begin(), f.times.end(), t);
  if (it == f.times.begin()) return f.initial;
  return f.values[static_cast<std::size_t>(it - f.times.begin() - 1)];
}

void aalen_johansen_cif(const dataio::IdmData& d, const std::vector<char>& keep, CifResult& out) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < d.n(); ++i) {
    if (keep[i]) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return d.time1[a] < d.time1[b]; });
  double surv = 1.0, c2 = 0.0, c3 = 0.0;
  std::size_t pos = 0;
  std::size_t g = 0;
  const std::size_t n = idx.size();
  auto record = [&](double upto) {
    while (g < out.grid.size() && out.grid[g] < upto) {
      out.illness[g] = c2;
      out.direct_death[g] = c3;
      out.initial[g] = surv;
      ++g;
    }
  };
  while (pos < n) {
    const double u = d.time1[idx[pos]];
    record(u);
    const double at_risk = static_cast<double>(n - pos);
    double d2 = 0.0, d3 = 0.0;
    for (; pos < n && d.time1[idx[pos]] == u; ++pos) {
      const int c = cause(d, idx[pos]);
      if (c == 2) d2 += 1.0;
      if (c == 3) d3 += 1.0;
    }
    c2 += surv * d2 / at_risk;
    c3 += surv * d3 / at_risk;
    surv *= 1.0 - (d2 + d3) / at_risk;
  }
  record(std::numeric_limits<double>::infinity());
}

void kernel_cif(const dataio::IdmData& d, const CifCondition& cond, CifResult& out) {
  const auto& col = d.data.column(cond.covariate);
  if (col.kind != dataio::ColumnKind::numeric) {
    fail_validation("NotContinuous", "kernel conditioning needs a numeric covariate", {{"covariate", cond.covariate}});
  }
  std::vector<double> xs;
  for (std::size_t i = 0; i < d.n(); ++i) {
    if (!col.is_missing(i)) xs.push_back(col.numeric[i]);
  }
  if (xs.empty()) fail_validation("NoData", "covariate has no observed values", {{"covariate", cond.covariate}});
  if (cond.bandwidth && !(*cond.bandwidth > 0.0)) {
    fail_validation("BandwidthNonPositive", "bandwidth must be positive", {{"bandwidth", *cond.bandwidth}});
  }
  const double h = cond.bandwidth ? *cond.bandwidth : gaussian_bandwidth(xs);
  const double x0 = *cond.value;
  if (x0 < stats::quantile(xs, 0.05) || x0 > stats::quantile(xs, 0.95)) {
    out.flags.push_back({"ExtrapolationWarning", "conditioning value lies outside the 5th-95th percentile range"});
  }
  std::vector<double> w(d.n(), 0.0);
  double den = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    if (col.is_missing(i)) continue;
    if (h > 0.0) {
      const double u = (col.numeric[i] - x0) / h;
      w[i] = std::exp(-0.5 * u * u);
    } else {
      w[i] = col.numeric[i] == x0 ? 1.0 : 0.0;
    }
    den += w[i];
  }
  if (!(den > 0.0)) fail_computation("EmptyLandmarkSet", "no subject carries kernel weight at the conditioning value");

  std::vector<int> censored(d.n());
  for (std::size_t i = 0; i < d.n(); ++i) censored[i] = cause(d, i) == 0 ? 1 : 0;
  const auto G = survcore::product_limit(d.time1, censored);
  for (std::size_t g = 0; g < out.grid.size(); ++g) {
    const double t = out.grid[g];
    double c2 = 0.0, c3 = 0.0;
    for (std::size_t i = 0; i < d.n(); ++i) {
      const int c = cause(d, i);
      if (w[i] == 0.0 || c == 0 || d.time1[i] > t) continue;
      const double gi = left_limit(G, d.time1[i]);
      if (!(gi > 0.0)) continue;
      (c == 2 ? c2 : c3) += w[i] / gi;
    }
    out.illness[g] = std::min(1.0, c2 / den);
    out.direct_death[g] = std::min(1.0 - out.illness[g], c3 / den);
    out.initial[g] = 1.0 - out.illness[g] - out.direct_death[g];
  }
  // Keep the estimate a distribution function.
  for (std::size_t g = 1; g < out.grid.size(); ++g) out.illness[g] = std::max(out.illness[g], out.illness[g - 1]);
}

}  // namespace

CifResult cumulative_incidence(const dataio::IdmData& d, const std::vector<double>& grid,
                               const std::optional<CifCondition>& condition) {
  if (grid.empty()) fail_validation("InvalidGrid", "grid must not be empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i]) || grid[i] < 0.0 || (i > 0 && grid[i] <= grid[i - 1])) {
      fail_validation("InvalidGrid", "grid times must be finite, >= 0 and strictly increasing", {{"grid", grid}});
    }
  }
  CifResult out;
  out.grid = grid;
  out.illness.assign(grid.size(), 0.0);
  out.direct_death.assign(grid.size(), 0.0);
  out.initial.assign(grid.size(), 1.0);
  out.condition = condition;

  if (condition && condition->value) {
    kernel_cif(d, *condition, out);
    return out;
  }
  std::vector<char> keep(d.n(), 1);
  if (condition && condition->level) {
    const auto f = survcore::factor_of(d.data, condition->covariate);
    auto it = std::find(f.labels.begin(), f.labels.end(), *condition->level);
    if (it == f.labels.end()) {
      fail_validation("UnknownLevel", "'" + *condition->level + "' is not a level of '" + condition->covariate + "'",
                      {{"covariate", condition->covariate}, {"value", *condition->level}});
    }
    const int code = static_cast<int>(it - f.labels.begin());
    for (std::size_t i = 0; i < d.n(); ++i) keep[i] = f.codes[i] == code ? 1 : 0;
  } else if (condition) {
    fail_validation("InvalidParameter", "conditioning needs either a level or a value", {{"covariate", condition->covariate}});
  }
  aalen_johansen_cif(d, keep, out);
  return out;
}

}  // namespace msm::msmprob
