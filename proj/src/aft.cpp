#include <algorithm>
#include <cmath>
#include <limits>

#include "msm/error.hpp"
#include "msm/kernels.hpp"
#include "msm/regression.hpp"
#include "msm/stats.hpp"

namespace msm::regression {

AftDistribution parse_distribution(const std::string& name) {
  if (name == "exponential") return AftDistribution::exponential;
  if (name == "weibull") return AftDistribution::weibull;
  if (name == "gaussian") return AftDistribution::gaussian;
  if (name == "logistic") return AftDistribution::logistic;
  if (name == "lognormal") return AftDistribution::lognormal;
  if (name == "loglogistic") return AftDistribution::loglogistic;
  fail_validation("InvalidParameter", "unknown distribution '" + name + "'", {{"distribution", name}});
}

const char* to_string(AftDistribution d) {
  switch (d) {
    case AftDistribution::exponential: return "exponential";
    case AftDistribution::weibull: return "weibull";
    case AftDistribution::gaussian: return "gaussian";
    case AftDistribution::logistic: return "logistic";
    case AftDistribution::lognormal: return "lognormal";
    case AftDistribution::loglogistic: return "loglogistic";
  }
  return "weibull";
}

bool log_transformed(AftDistribution d) {
  return d == AftDistribution::exponential || d == AftDistribution::weibull || d == AftDistribution::lognormal ||
         d == AftDistribution::loglogistic;
}

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Family { extreme, logistic, normal };

Family family_of(AftDistribution d) {
  switch (d) {
    case AftDistribution::exponential:
    case AftDistribution::weibull: return Family::extreme;
    case AftDistribution::logistic:
    case AftDistribution::loglogistic: return Family::logistic;
    default: return Family::normal;
  }
}

// log density or log survivor of the standardised error at z, with its first
// (a) and second (b) derivatives in z.
struct Piece {
  double value;
  double a;
  double b;
};

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double inverse_mills(double z) {
  if (z < 25.0) {
    const double q = 0.5 * std::erfc(z / std::sqrt(2.0));
    return std::exp(-0.5 * z * z - kLogSqrt2Pi) / q;
  }
  const double z2 = z * z;
  const double r = 1.0 / z - 1.0 / (z * z2) + 3.0 / (z * z2 * z2) - 15.0 / (z * z2 * z2 * z2);
  return 1.0 / r;
}

Piece event_piece(Family f, double z) {
  switch (f) {
    case Family::extreme: {
      const double ez = std::exp(z);
      return {z - ez, 1.0 - ez, -ez};
    }
    case Family::logistic: {
      const double az = std::fabs(z);
      const double F = 1.0 / (1.0 + std::exp(-z));
      return {-az - 2.0 * std::log1p(std::exp(-az)), 1.0 - 2.0 * F, -2.0 * F * (1.0 - F)};
    }
    case Family::normal:
      return {-0.5 * z * z - kLogSqrt2Pi, -z, -1.0};
  }
  return {0, 0, 0};
}

Piece censored_piece(Family f, double z) {
  switch (f) {
    case Family::extreme: {
      const double ez = std::exp(z);
      return {-ez, -ez, -ez};
    }
    case Family::logistic: {
      const double F = 1.0 / (1.0 + std::exp(-z));
      return {-(std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z)))), -F, -F * (1.0 - F)};
    }
    case Family::normal: {
      const double lam = inverse_mills(z);
      double logq;
      if (z < 25.0) {
        logq = std::log(0.5 * std::erfc(z / std::sqrt(2.0)));
      } else {
        logq = -0.5 * z * z - kLogSqrt2Pi - std::log(lam);
      }
      return {logq, -lam, -lam * (lam - z)};
    }
  }
  return {0, 0, 0};
}

// Design with a leading intercept column.
std::vector<double> with_intercept(const Design& d) {
  std::vector<double> x(d.n, 1.0);
  x.insert(x.end(), d.x.begin(), d.x.end());
  return x;
}

AftEval evaluate_impl(const std::vector<double>& x, std::size_t n, std::span<const double> y,
                      std::span<const int> status, Family fam, bool log_family, const VectorXd& beta,
                      double log_scale, bool want_hessian) {
  const std::size_t p = static_cast<std::size_t>(beta.size());
  const double sigma = std::exp(log_scale);
  std::vector<double> eta(n);
  kernels::gemv(x, n, {beta.data(), p}, eta);
  std::vector<double> w1(n), w2(n), w3(n);
  AftEval e;
  double gs = 0.0;
  double hss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = (y[i] - eta[i]) / sigma;
    const bool event = status[i] != 0;
    const Piece pc = event ? event_piece(fam, z) : censored_piece(fam, z);
    e.loglik += pc.value;
    if (event) e.loglik -= log_scale + (log_family ? y[i] : 0.0);
    w1[i] = -pc.a / sigma;
    gs += -pc.a * z - (event ? 1.0 : 0.0);
    w2[i] = pc.b / (sigma * sigma);
    w3[i] = (pc.a + pc.b * z) / sigma;
    hss += pc.b * z * z + pc.a * z;
  }
  e.gradient = VectorXd(static_cast<Index>(p + 1));
  std::vector<double> gb(p);
  kernels::xt_w(x, n, w1, gb);
  for (std::size_t k = 0; k < p; ++k) e.gradient[static_cast<Index>(k)] = gb[k];
  e.gradient[static_cast<Index>(p)] = gs;
  if (want_hessian) {
    e.hessian = MatrixXd(static_cast<Index>(p + 1), static_cast<Index>(p + 1));
    std::vector<double> hbb(p * p);
    std::vector<double> hbs(p);
    kernels::xt_diag_x(x, n, w2, hbb);
    kernels::xt_w(x, n, w3, hbs);
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = 0; b < p; ++b) e.hessian(static_cast<Index>(a), static_cast<Index>(b)) = hbb[a * p + b];
      e.hessian(static_cast<Index>(a), static_cast<Index>(p)) = hbs[a];
      e.hessian(static_cast<Index>(p), static_cast<Index>(a)) = hbs[a];
    }
    e.hessian(static_cast<Index>(p), static_cast<Index>(p)) = hss;
  }
  return e;
}

std::vector<double> response(const AftData& data, AftDistribution dist) {
  std::vector<double> y(data.time.size());
  const bool lg = log_transformed(dist);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (lg && !(data.time[i] > 0.0)) {
      fail_validation("NonPositiveTime", std::string(to_string(dist)) + " model needs strictly positive times",
                      {{"row", i + 1}, {"time", data.time[i]}});
    }
    y[i] = lg ? std::log(data.time[i]) : data.time[i];
  }
  return y;
}

}  // namespace

AftEval aft_evaluate(const AftData& data, AftDistribution dist, const VectorXd& beta, double log_scale,
                     bool want_hessian) {
  const auto y = response(data, dist);
  return evaluate_impl(with_intercept(data.design), data.design.n, y, data.status, family_of(dist),
                       log_transformed(dist), beta, log_scale, want_hessian);
}

AftFit fit_aft(const AftData& data, AftDistribution dist, const AftOptions& opt) {
  const std::size_t n = data.time.size();
  const std::size_t p = data.design.p() + 1;
  const auto pi = static_cast<Index>(p);
  AftFit fit;
  fit.distribution = dist;
  fit.n = n;
  fit.n_events = static_cast<std::size_t>(std::count(data.status.begin(), data.status.end(), 1));
  if (fit.n_events == 0) fail_computation("NoEvents", "no events in the data");
  fit.names.push_back("(Intercept)");
  fit.names.insert(fit.names.end(), data.design.names.begin(), data.design.names.end());

  const auto y = response(data, dist);
  const auto x = with_intercept(data.design);
  const Family fam = family_of(dist);
  const bool lg = log_transformed(dist);
  std::optional<double> fixed = opt.fixed_scale;
  if (dist == AftDistribution::exponential) fixed = 1.0;

  VectorXd beta = VectorXd::Zero(pi);
  beta[0] = stats::mean(y);
  double s = fixed ? std::log(*fixed) : std::log(std::max(stats::sd(y), 1e-3));
  if (fam == Family::logistic && !fixed) s -= 0.5;  // logistic sd is 1.81 sigma

  // Free parameters: beta, plus log sigma unless fixed.
  const Index m = fixed ? pi : pi + 1;
  auto eval = [&](const VectorXd& b, double ls) { return evaluate_impl(x, n, y, data.status, fam, lg, b, ls, true); };
  AftEval cur = eval(beta, s);
  int iter = 0;
  bool converged = false;
  while (iter < opt.max_iter) {
    ++iter;
    const VectorXd g = cur.gradient.head(m);
    const MatrixXd negh = -cur.hessian.topLeftCorner(m, m);
    // Newton direction on the negated Hessian; ridge it if not positive definite.
    VectorXd dir;
    double ridge = 0.0;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::LLT<MatrixXd> llt(negh + ridge * MatrixXd::Identity(m, m));
      if (llt.info() == Eigen::Success) {
        dir = llt.solve(g);
        break;
      }
      ridge = ridge == 0.0 ? 1e-6 * std::max(1.0, negh.diagonal().cwiseAbs().maxCoeff()) : ridge * 10.0;
    }
    if (dir.size() == 0) break;
    double step = 1.0;
    AftEval next;
    VectorXd nb;
    double ns = s;
    for (int h = 0; h < 40; ++h) {
      nb = beta + step * dir.head(pi);
      ns = fixed ? s : s + step * dir[pi];
      next = eval(nb, ns);
      if (std::isfinite(next.loglik) && next.loglik >= cur.loglik - 1e-12 * std::fabs(cur.loglik)) break;
      step *= 0.5;
    }
    if (!std::isfinite(next.loglik)) break;
    const bool small = std::fabs(next.loglik - cur.loglik) <= opt.eps * std::fabs(next.loglik);
    beta = nb;
    s = ns;
    cur = std::move(next);
    if (small && cur.gradient.head(m).cwiseAbs().maxCoeff() < 1e-6) {
      converged = true;
      break;
    }
  }
  fit.converged = converged;
  fit.iterations = iter;
  fit.coef = beta;
  fit.log_scale = s;
  fit.scale = std::exp(s);
  fit.loglik = cur.loglik;

  const MatrixXd negh = -cur.hessian.topLeftCorner(m, m);
  Eigen::FullPivLU<MatrixXd> lu(negh);
  fit.cov = lu.isInvertible() ? MatrixXd(lu.inverse())
                              : MatrixXd::Constant(m, m, std::numeric_limits<double>::quiet_NaN());
  fit.se = fit.cov.diagonal().head(pi).array().sqrt();
  fit.log_scale_se = fixed ? 0.0 : std::sqrt(fit.cov(pi, pi));
  fit.z = beta.cwiseQuotient(fit.se);
  fit.p = VectorXd(pi);
  for (Index k = 0; k < pi; ++k) fit.p[k] = stats::normal_two_sided_p(fit.z[k]);
  fit.n_params = static_cast<int>(m);
  fit.aic = -2.0 * fit.loglik + 2.0 * fit.n_params;
  return fit;
}

}  // namespace msm::regression
