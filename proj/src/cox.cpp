#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "msm/error.hpp"
#include "msm/kernels.hpp"
#include "msm/regression.hpp"
#include "msm/stats.hpp"

namespace msm::regression {

Ties parse_ties(const std::string& name) {
  if (name == "efron") return Ties::efron;
  if (name == "breslow") return Ties::breslow;
  fail_validation("InvalidParameter", "ties must be efron or breslow", {{"ties", name}});
}

const char* to_string(Ties ties) { return ties == Ties::efron ? "efron" : "breslow"; }

bool CoxFit::any_infinite() const {
  return std::any_of(infinite_coef.begin(), infinite_coef.end(), [](char c) { return c != 0; });
}

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct EventGroup {
  double time;
  std::vector<std::size_t> deaths;
};

std::vector<EventGroup> event_groups(const CoxData& d) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < d.n(); ++i) {
    if (d.status[i]) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return d.stop[a] < d.stop[b]; });
  std::vector<EventGroup> groups;
  for (auto i : idx) {
    if (groups.empty() || groups.back().time != d.stop[i]) groups.push_back({d.stop[i], {}});
    groups.back().deaths.push_back(i);
  }
  return groups;
}

// Visits every distinct event time with its log-likelihood, score and
// information contributions.
template <class Visit>
void sweep(const CoxData& d, Ties ties, const VectorXd& beta, bool want_info, Visit&& visit) {
  const std::size_t n = d.n();
  const std::size_t p = d.design.p();
  std::vector<double> eta(n, 0.0);
  if (p > 0) kernels::gemv(d.design.x, n, {beta.data(), p}, eta);
  const double shift = n ? *std::max_element(eta.begin(), eta.end()) : 0.0;
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = std::exp(eta[i] - shift);

  std::vector<double> v(n);
  std::vector<double> s1(p);
  std::vector<double> s2(p * p);
  VectorXd s1d(static_cast<Index>(p));
  MatrixXd s2d(static_cast<Index>(p), static_cast<Index>(p));
  for (const auto& g : event_groups(d)) {
    const double t = g.time;
    double s0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = (d.start[i] < t && t <= d.stop[i]) ? r[i] : 0.0;
      s0 += v[i];
    }
    if (p > 0) {
      kernels::xt_w(d.design.x, n, v, s1);
      if (want_info) kernels::xt_diag_x(d.design.x, n, v, s2);
    }
    const Eigen::Map<const VectorXd> S1(s1.data(), static_cast<Index>(p));
    const Eigen::Map<const MatrixXd> S2(s2.data(), static_cast<Index>(p), static_cast<Index>(p));

    double ll = 0.0;
    double s0d = 0.0;
    VectorXd score = VectorXd::Zero(static_cast<Index>(p));
    s1d.setZero();
    s2d.setZero();
    for (auto i : g.deaths) {
      ll += eta[i];
      s0d += r[i];
      for (std::size_t k = 0; k < p; ++k) {
        const double xk = d.design.at(i, k);
        score[static_cast<Index>(k)] += xk;
        s1d[static_cast<Index>(k)] += r[i] * xk;
        if (want_info) {
          for (std::size_t l = 0; l <= k; ++l) s2d(static_cast<Index>(k), static_cast<Index>(l)) += r[i] * xk * d.design.at(i, l);
        }
      }
    }
    if (want_info) s2d.triangularView<Eigen::StrictlyUpper>() = s2d.transpose().triangularView<Eigen::StrictlyUpper>();

    MatrixXd info = MatrixXd::Zero(static_cast<Index>(p), static_cast<Index>(p));
    const auto dcount = g.deaths.size();
    for (std::size_t k = 0; k < dcount; ++k) {
      const double f = ties == Ties::efron ? static_cast<double>(k) / static_cast<double>(dcount) : 0.0;
      const double den = s0 - f * s0d;
      ll -= std::log(den) + shift;
      const VectorXd a = (S1 - f * s1d) / den;
      score -= a;
      if (want_info) info += (S2 - f * s2d) / den - a * a.transpose();
    }
    visit(t, static_cast<int>(dcount), ll, score, info);
  }
}

MatrixXd safe_inverse(const MatrixXd& info, bool& singular) {
  const Index p = info.rows();
  singular = false;
  if (p == 0) return info;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(info);
  const auto& ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  if (!(ev.minCoeff() > 1e-10 * std::max(top, 1e-300))) {
    singular = true;
    return MatrixXd::Constant(p, p, std::numeric_limits<double>::quiet_NaN());
  }
  return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

CoxEval cox_evaluate(const CoxData& data, Ties ties, const VectorXd& beta, bool want_info) {
  const auto p = static_cast<Index>(data.design.p());
  CoxEval e;
  e.score = VectorXd::Zero(p);
  e.info = MatrixXd::Zero(p, p);
  sweep(data, ties, beta, want_info, [&](double, int, double ll, const VectorXd& s, const MatrixXd& info) {
    e.loglik += ll;
    e.score += s;
    if (want_info) e.info += info;
  });
  return e;
}

std::vector<EventTimeTerm> cox_event_terms(const CoxData& data, Ties ties, const VectorXd& beta) {
  std::vector<EventTimeTerm> out;
  sweep(data, ties, beta, true, [&](double t, int deaths, double, const VectorXd& s, const MatrixXd& info) {
    out.push_back({t, deaths, s, info});
  });
  return out;
}

CoxFit fit_cox(const CoxData& raw, const CoxOptions& opt) {
  const std::size_t n = raw.n();
  const std::size_t p = raw.design.p();
  const auto pi = static_cast<Index>(p);
  CoxFit fit;
  fit.names = raw.design.names;
  fit.terms = raw.design.terms;
  fit.ties = opt.ties;
  fit.n = n;
  fit.n_events = static_cast<std::size_t>(std::count(raw.status.begin(), raw.status.end(), 1));
  if (fit.n_events == 0) fail_computation("NoEvents", "no events in the data", {{"n", n}});

  // Centred copy; the partial likelihood is invariant to location shifts.
  CoxData d = raw;
  fit.means = VectorXd::Zero(pi);
  VectorXd sds = VectorXd::Zero(pi);
  for (std::size_t k = 0; k < p; ++k) {
    auto col = raw.design.col(k);
    const double m = stats::mean(col);
    fit.means[static_cast<Index>(k)] = m;
    sds[static_cast<Index>(k)] = stats::sd(col);
    for (std::size_t i = 0; i < n; ++i) d.design.x[k * n + i] -= m;
  }

  VectorXd beta = VectorXd::Zero(pi);
  CoxEval cur = cox_evaluate(d, opt.ties, beta);
  fit.loglik_null = cur.loglik;
  bool singular = false;
  const MatrixXd inv0 = safe_inverse(cur.info, singular);
  if (singular) {
    fail_computation("SingularInformation", "information matrix is singular (collinear or constant covariates)",
                     {{"terms", fit.names}});
  }
  const double score_stat = cur.score.dot(inv0 * cur.score);

  int iter = 0;
  bool converged = p == 0;
  while (!converged && iter < opt.max_iter) {
    ++iter;
    bool sing = false;
    const MatrixXd inv = safe_inverse(cur.info, sing);
    if (sing) break;
    VectorXd step = inv * cur.score;
    CoxEval next = cox_evaluate(d, opt.ties, beta + step);
    int halvings = 0;
    while ((!std::isfinite(next.loglik) || next.loglik < cur.loglik - 1e-12 * std::fabs(cur.loglik)) && halvings < 30) {
      step *= 0.5;
      next = cox_evaluate(d, opt.ties, beta + step);
      ++halvings;
    }
    beta += step;
    const bool small = std::fabs(next.loglik - cur.loglik) <= opt.eps * std::fabs(next.loglik);
    cur = std::move(next);
    if (small && (cur.score.size() == 0 || cur.score.cwiseAbs().maxCoeff() < 1e-8)) converged = true;
  }
  fit.converged = converged;
  fit.iterations = iter;
  fit.coef = beta;
  fit.loglik_final = cur.loglik;

  bool sing = false;
  fit.cov = safe_inverse(cur.info, sing);
  fit.hr = beta.array().exp();
  fit.se = fit.cov.diagonal().array().sqrt();
  fit.z = beta.cwiseQuotient(fit.se);
  fit.p = VectorXd(pi);
  fit.infinite_coef.assign(p, 0);
  for (std::size_t k = 0; k < p; ++k) {
    const auto ki = static_cast<Index>(k);
    fit.p[ki] = stats::normal_two_sided_p(fit.z[ki]);
    if (std::fabs(beta[ki] * sds[ki]) > 15.0 || sing) fit.infinite_coef[k] = 1;
  }
  const int df = static_cast<int>(p);
  fit.lr = {2.0 * (fit.loglik_final - fit.loglik_null), df, 0.0};
  fit.lr.p = stats::chi2_sf(fit.lr.statistic, df);
  const double wald = sing ? std::numeric_limits<double>::quiet_NaN() : beta.dot(cur.info * beta);
  fit.wald = {wald, df, stats::chi2_sf(wald, df)};
  fit.score = {score_stat, df, stats::chi2_sf(score_stat, df)};
  return fit;
}

HazardIncrements breslow_increments(const CoxData& d, const VectorXd& beta) {
  HazardIncrements out;
  const std::size_t n = d.n();
  const std::size_t p = d.design.p();
  std::vector<double> eta(n, 0.0);
  if (p > 0) kernels::gemv(d.design.x, n, {beta.data(), p}, eta);
  for (const auto& g : event_groups(d)) {
    double s0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (d.start[i] < g.time && g.time <= d.stop[i]) s0 += std::exp(eta[i]);
    }
    out.times.push_back(g.time);
    out.increments.push_back(static_cast<double>(g.deaths.size()) / s0);
  }
  return out;
}

}  // namespace msm::regression
