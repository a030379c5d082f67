#include <algorithm>
#include <cmath>
#include <set>

#include "msm/error.hpp"
#include "msm/regression.hpp"
#include "msm/stats.hpp"

namespace msm::regression {

namespace {

// The first `k` terms of a design, same rows.
Design leading_terms(const Design& full, std::size_t k) {
  Design d;
  d.n = full.n;
  d.rows = full.rows;
  for (std::size_t t = 0; t < k; ++t) {
    Term term = full.terms[t];
    std::vector<std::size_t> cols;
    for (auto c : term.columns) {
      cols.push_back(d.p());
      d.append_column(full.names[c], full.col(c));
    }
    term.columns = cols;
    d.terms.push_back(std::move(term));
  }
  return d;
}

CoxData with_design(const SurvivalFrame& frame, Design design) {
  CoxData cd;
  for (auto r : design.rows) {
    cd.start.push_back(frame.start[r]);
    cd.stop.push_back(frame.stop[r]);
    cd.status.push_back(frame.status[r]);
  }
  cd.design = std::move(design);
  return cd;
}

}  // namespace

CoxData make_cox_data(const SurvivalFrame& frame, const std::vector<std::string>& covariates) {
  return with_design(frame, build_design(*frame.data, covariates));
}

AnovaTable anova_sequential(const SurvivalFrame& frame, const std::vector<std::string>& terms, Ties ties) {
  if (terms.empty()) fail_validation("NoTerms", "ANOVA needs at least one term");
  const Design full = build_design(*frame.data, terms);
  AnovaTable table;
  table.n = full.n;
  double previous = 0.0;
  for (std::size_t k = 1; k <= full.terms.size(); ++k) {
    CoxData cd = with_design(frame, leading_terms(full, k));
    CoxFit fit = fit_cox(cd, {ties});
    if (k == 1) {
      table.loglik_null = fit.loglik_null;
      previous = fit.loglik_null;
    }
    AnovaRow row;
    row.term = full.terms[k - 1].name;
    row.loglik = fit.loglik_final;
    row.chi_squared = 2.0 * (fit.loglik_final - previous);
    row.df = static_cast<int>(full.terms[k - 1].columns.size());
    row.p = stats::chi2_sf(row.chi_squared, row.df);
    table.rows.push_back(row);
    previous = fit.loglik_final;
  }
  return table;
}

std::vector<std::vector<double>> rcs_basis(std::span<const double> x, std::span<const double> t) {
  const std::size_t k = t.size();
  std::vector<std::vector<double>> cols;
  if (k < 3) return cols;
  const double norm = (t[k - 1] - t[0]) * (t[k - 1] - t[0]);
  auto cube = [](double v) { return v > 0.0 ? v * v * v : 0.0; };
  for (std::size_t j = 0; j + 2 < k; ++j) {
    std::vector<double> c(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      c[i] = (cube(x[i] - t[j]) - cube(x[i] - t[k - 2]) * (t[k - 1] - t[j]) / (t[k - 1] - t[k - 2]) +
              cube(x[i] - t[k - 1]) * (t[k - 2] - t[j]) / (t[k - 1] - t[k - 2])) /
             norm;
    }
    cols.push_back(std::move(c));
  }
  return cols;
}

NonlinearityResult nonlinearity_test(const SurvivalFrame& frame, const std::string& covariate,
                                     const std::vector<std::string>& adjust, Ties ties) {
  const auto& col = frame.data->column(covariate);
  if (col.kind != dataio::ColumnKind::numeric) {
    fail_validation("NotContinuous", "covariate '" + covariate + "' is not numeric", {{"covariate", covariate}});
  }
  std::vector<std::string> covs;
  for (const auto& a : adjust) {
    if (a != covariate) covs.push_back(a);
  }
  covs.push_back(covariate);
  Design linear = build_design(*frame.data, covs);
  const auto& xcol_term = linear.terms.back();
  const auto xs = linear.col(xcol_term.columns.front());
  std::set<double> distinct(xs.begin(), xs.end());
  if (distinct.size() < 5) {
    fail_computation("TooFewDistinctValues", "nonlinearity test needs at least 5 distinct values",
                     {{"covariate", covariate}, {"distinct", distinct.size()}});
  }
  std::vector<double> values(xs.begin(), xs.end());
  std::vector<double> knots;
  for (double q : {0.05, 0.35, 0.65, 0.95}) knots.push_back(stats::quantile(values, q));
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i] > knots[i - 1])) {
      fail_computation("TooFewDistinctValues", "spline knots are not distinct", {{"covariate", covariate}, {"knots", knots}});
    }
  }
  Design spline = linear;
  auto basis = rcs_basis(values, knots);
  for (std::size_t j = 0; j < basis.size(); ++j) {
    spline.terms.back().columns.push_back(spline.p());
    spline.append_column(covariate + std::string(j + 1, '\''), basis[j]);
  }
  const CoxFit fl = fit_cox(with_design(frame, std::move(linear)), {ties});
  const CoxFit fs = fit_cox(with_design(frame, std::move(spline)), {ties});
  NonlinearityResult res;
  res.covariate = covariate;
  res.loglik_linear = fl.loglik_final;
  res.loglik_spline = fs.loglik_final;
  res.chi_squared = 2.0 * (fs.loglik_final - fl.loglik_final);
  res.df = static_cast<int>(basis.size());
  res.p = stats::chi2_sf(res.chi_squared, res.df);
  res.knots = knots;
  return res;
}

}  // namespace msm::regression
