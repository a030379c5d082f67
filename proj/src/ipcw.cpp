#include <cmath>
#include <limits>

#include "msm/error.hpp"
#include "msm/msmprob.hpp"
#include "msm/stats.hpp"
#include "msm/survcore.hpp"

namespace msm::msmprob {

double gaussian_bandwidth(std::span<const double> x) {
  return 1.06 * stats::sd(x) * std::pow(static_cast<double>(x.size()), -0.2);
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Kernel weights for each subject (NaN covariate -> weight 0).
std::vector<double> kernel_weights(const dataio::IdmData& d, const std::optional<KernelCondition>& cond,
                                   TransitionMatrix& out) {
  std::vector<double> w(d.n(), 1.0);
  if (!cond) return w;
  const auto& col = d.data.column(cond->covariate);
  if (col.kind != dataio::ColumnKind::numeric) {
    fail_validation("NotContinuous", "kernel conditioning needs a numeric covariate", {{"covariate", cond->covariate}});
  }
  std::vector<double> xs;
  for (std::size_t i = 0; i < d.n(); ++i) {
    if (!col.is_missing(i)) xs.push_back(col.numeric[i]);
  }
  if (xs.empty()) fail_validation("NoData", "covariate has no observed values", {{"covariate", cond->covariate}});
  if (cond->bandwidth && !(*cond->bandwidth > 0.0)) {
    fail_validation("BandwidthNonPositive", "bandwidth must be positive", {{"bandwidth", *cond->bandwidth}});
  }
  const double h = cond->bandwidth ? *cond->bandwidth : gaussian_bandwidth(xs);
  const double x0 = cond->value;
  if (x0 < stats::quantile(xs, 0.05) || x0 > stats::quantile(xs, 0.95)) {
    out.add_flag("ExtrapolationWarning", "conditioning value lies outside the 5th-95th percentile range");
  }
  for (std::size_t i = 0; i < d.n(); ++i) {
    if (col.is_missing(i)) {
      w[i] = 0.0;
    } else if (h > 0.0) {
      const double u = (col.numeric[i] - x0) / h;
      w[i] = std::exp(-0.5 * u * u);
    } else {
      // constant covariate: every subject matching x0 counts fully
      w[i] = col.numeric[i] == x0 ? 1.0 : 0.0;
    }
  }
  return w;
}

}  // namespace

// Inverse-probability-of-censoring weighted occupation fractions. A subject
// still under follow-up at t has a known state and weight G(s)/G(t), where G
// is the censoring survivor function; the remaining mass is death.
TransitionMatrix ipcw_conditional(const dataio::IdmData& d, double s, const std::vector<double>& grid,
                                  const std::optional<KernelCondition>& cond) {
  validate_grid(s, grid);
  TransitionMatrix out;
  out.method = Method::ipcw;
  out.s = s;
  out.n_states = 3;
  out.grid = grid;
  out.from_states = {1, 2};
  out.est.assign(grid.size(), std::vector<double>(9, kNaN));

  const auto w = kernel_weights(d, cond, out);
  std::vector<int> censored(d.n());
  for (std::size_t i = 0; i < d.n(); ++i) censored[i] = 1 - d.event[i];
  const auto G = survcore::product_limit(d.stime, censored);
  const double gs = G.at(s);

  double den1 = 0.0, den2 = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    if (d.time1[i] > s) den1 += w[i];
    else if (d.event1[i] == 1 && s < d.stime[i]) den2 += w[i];
  }
  if (!(den1 > 0.0)) out.add_flag("EmptyLandmarkSet", "no (weighted) subject is in state 1 at s");
  if (!(den2 > 0.0)) out.add_flag("EmptyLandmarkSet", "no (weighted) subject is in state 2 at s");

  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double t = grid[g];
    const double gt = G.at(t);
    if (!(gt > 0.0)) {
      out.add_flag("CensoringExhausted", "censoring survivor reaches 0 before t = " + std::to_string(t));
      continue;
    }
    const double scale = gs / gt;
    double a11 = 0.0, a12 = 0.0, a22 = 0.0;
    for (std::size_t i = 0; i < d.n(); ++i) {
      if (!(d.stime[i] > t) || w[i] == 0.0) continue;
      if (d.time1[i] > s) {
        (d.time1[i] > t ? a11 : a12) += w[i];
      } else if (d.event1[i] == 1 && s < d.stime[i]) {
        a22 += w[i];
      }
    }
    auto& e = out.est[g];
    if (den1 > 0.0) {
      double p11 = a11 * scale / den1;
      double p12 = a12 * scale / den1;
      if (p11 + p12 > 1.0) {
        const double total = p11 + p12;
        p11 /= total;
        p12 /= total;
        out.add_flag("Clamped", "weighted occupation fractions from state 1 exceeded 1 and were rescaled");
      }
      e[0] = p11;
      e[1] = p12;
      e[2] = std::max(0.0, 1.0 - p11 - p12);
    }
    if (den2 > 0.0) {
      double p22 = a22 * scale / den2;
      if (p22 > 1.0) {
        p22 = 1.0;
        out.add_flag("Clamped", "weighted occupation fraction in state 2 exceeded 1 and was capped");
      }
      e[3] = 0.0;
      e[4] = p22;
      e[5] = 1.0 - p22;
    }
  }
  return out;
}

}  // namespace msm::msmprob
