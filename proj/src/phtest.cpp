#include <cmath>

#include "msm/error.hpp"
#include "msm/regression.hpp"
#include "msm/stats.hpp"

namespace msm::regression {

TimeTransform parse_time_transform(const std::string& name) {
  if (name == "km") return TimeTransform::km;
  if (name == "identity") return TimeTransform::identity;
  if (name == "log") return TimeTransform::log;
  fail_validation("InvalidParameter", "time transform must be km, identity or log", {{"transform", name}});
}

const char* to_string(TimeTransform t) {
  switch (t) {
    case TimeTransform::km: return "km";
    case TimeTransform::identity: return "identity";
    case TimeTransform::log: return "log";
  }
  return "km";
}

// Score test for adding x * g(t) interactions at the fitted beta: the
// augmented score is (0, sum_t g_t U_t) and the augmented information is
// built from the per-event-time information V_t weighted by 1, g_t and g_t^2.
PhTestResult ph_test(const CoxData& data, const CoxFit& fit, TimeTransform transform) {
  using Eigen::Index;
  const std::size_t p = data.design.p();
  const std::size_t events = fit.n_events;
  if (events < p + 2) {
    fail_computation("TooFewEvents", "proportional hazards test needs at least p + 2 events",
                     {{"events", events}, {"p", p}});
  }
  if (!fit.converged) fail_computation("NotConverged", "proportional hazards test needs a converged fit");

  auto terms = cox_event_terms(data, fit.ties, fit.coef);

  std::vector<double> g(terms.size());
  double surv = 1.0;  // left-continuous Kaplan-Meier over (start, stop] risk sets
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const double t = terms[k].time;
    switch (transform) {
      case TimeTransform::identity: g[k] = t; break;
      case TimeTransform::log: g[k] = std::log(t); break;
      case TimeTransform::km: {
        g[k] = 1.0 - surv;
        double at_risk = 0.0;
        for (std::size_t i = 0; i < data.n(); ++i) {
          if (data.start[i] < t && t <= data.stop[i]) at_risk += 1.0;
        }
        surv *= 1.0 - terms[k].deaths / at_risk;
        break;
      }
    }
  }
  double gsum = 0.0;
  double dsum = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    gsum += g[k] * terms[k].deaths;
    dsum += terms[k].deaths;
  }
  for (double& v : g) v -= gsum / dsum;

  const auto pi = static_cast<Index>(p);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * pi);
  Eigen::MatrixXd imat = Eigen::MatrixXd::Zero(2 * pi, 2 * pi);
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const auto& tk = terms[k];
    u.head(pi) += tk.score;
    u.tail(pi) += g[k] * tk.score;
    imat.topLeftCorner(pi, pi) += tk.info;
    imat.topRightCorner(pi, pi) += g[k] * tk.info;
    imat.bottomRightCorner(pi, pi) += g[k] * g[k] * tk.info;
  }
  imat.bottomLeftCorner(pi, pi) = imat.topRightCorner(pi, pi).transpose();

  auto quad = [&](const std::vector<Index>& idx) {
    const auto m = static_cast<Index>(idx.size());
    Eigen::VectorXd us(m);
    Eigen::MatrixXd is(m, m);
    for (Index a = 0; a < m; ++a) {
      us[a] = u[idx[static_cast<std::size_t>(a)]];
      for (Index b = 0; b < m; ++b) is(a, b) = imat(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
    return us.dot(is.ldlt().solve(us));
  };

  PhTestResult res;
  res.transform = transform;
  int total_df = 0;
  for (const auto& term : data.design.terms) {
    std::vector<Index> idx;
    for (std::size_t k = 0; k < p; ++k) idx.push_back(static_cast<Index>(k));
    for (auto c : term.columns) idx.push_back(pi + static_cast<Index>(c));
    const double chi = quad(idx);
    const int df = static_cast<int>(term.columns.size());
    total_df += df;
    res.rows.push_back({term.name, chi, df, stats::chi2_sf(chi, df)});
  }
  std::vector<Index> all;
  for (Index k = 0; k < 2 * pi; ++k) all.push_back(k);
  const double chi = quad(all);
  res.rows.push_back({"GLOBAL", chi, total_df, stats::chi2_sf(chi, total_df)});
  return res;
}

}  // namespace msm::regression
