#include <cmath>

#include "msm/error.hpp"
#include "msm/regression.hpp"

namespace msm::regression {

// Single-predictor logistic regression by IRLS. Separation shows up as a
// slope that keeps growing while the fitted probabilities collapse to 0/1.
LogisticFit fit_logistic(std::span<const double> x, std::span<const double> y, int max_iter, double eps) {
  if (x.size() != y.size()) fail_validation("LengthMismatch", "logistic fit needs equal-length inputs");
  const std::size_t n = x.size();
  LogisticFit fit;
  fit.coef = Eigen::Vector2d::Zero();
  if (n == 0) return fit;

  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= static_cast<double>(n);
  if (ybar <= 0.0 || ybar >= 1.0) {
    fit.separated = true;
    return fit;
  }
  fit.coef[0] = std::log(ybar / (1.0 - ybar));

  auto deviance = [&](const Eigen::Vector2d& b) {
    double dev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double eta = b[0] + b[1] * x[i];
      // log(1 + e^eta) computed without overflow
      const double l1pe = eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
      dev -= 2.0 * (y[i] * eta - l1pe);
    }
    return dev;
  };

  double dev = deviance(fit.coef);
  for (int it = 0; it < max_iter; ++it) {
    fit.iterations = it + 1;
    Eigen::Matrix2d info = Eigen::Matrix2d::Zero();
    Eigen::Vector2d score = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const double mu = 1.0 / (1.0 + std::exp(-(fit.coef[0] + fit.coef[1] * x[i])));
      const double w = mu * (1.0 - mu);
      score[0] += y[i] - mu;
      score[1] += (y[i] - mu) * x[i];
      info(0, 0) += w;
      info(0, 1) += w * x[i];
      info(1, 1) += w * x[i] * x[i];
    }
    info(1, 0) = info(0, 1);
    Eigen::LDLT<Eigen::Matrix2d> ldlt(info);
    if (ldlt.info() != Eigen::Success || !(info.determinant() > 1e-12 * (1.0 + info.squaredNorm()))) {
      fit.separated = true;
      return fit;
    }
    Eigen::Vector2d step = ldlt.solve(score);
    Eigen::Vector2d next = fit.coef + step;
    double nd = deviance(next);
    for (int h = 0; h < 30 && !(nd <= dev + 1e-12); ++h) {
      step *= 0.5;
      next = fit.coef + step;
      nd = deviance(next);
    }
    fit.coef = next;
    const bool small = std::fabs(nd - dev) <= eps * (std::fabs(nd) + 0.1);
    dev = nd;
    if (small) {
      fit.converged = true;
      break;
    }
  }
  // A near-zero deviance means the classes are (quasi-)separated.
  if (dev < 1e-6 * static_cast<double>(n) || !std::isfinite(fit.coef[1])) fit.separated = true;
  return fit;
}

}  // namespace msm::regression
