#include <cmath>
#include <limits>

#include "msm/error.hpp"
#include "msm/msmprob.hpp"
#include "msm/stats.hpp"
#include "msm/survcore.hpp"

namespace msm::msmprob {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Subsample {
  std::vector<double> time;
  std::vector<int> status;
};

// Product-limit curve, optionally presmoothed: the status indicators are
// replaced by logistic fitted values P(status = 1 | time).
survcore::StepFunction curve(const Subsample& d, bool presmooth, TransitionMatrix& out, const std::string& what) {
  if (!presmooth) return survcore::product_limit(d.time, d.status);
  std::vector<double> y(d.status.begin(), d.status.end());
  const double m = stats::mean(d.time);
  const double sd = stats::sd(d.time);
  std::vector<double> x(d.time.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = sd > 0 ? (d.time[i] - m) / sd : 0.0;
  const auto fit = regression::fit_logistic(x, y);
  if (fit.separated || !fit.converged) {
    out.add_flag("DegenerateLogistic", "presmoothing fit for " + what + " is degenerate; landmark estimate used");
    return survcore::product_limit(d.time, d.status);
  }
  std::vector<double> w(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) w[i] = 1.0 / (1.0 + std::exp(-(fit.coef[0] + fit.coef[1] * x[i])));
  return survcore::weighted_product_limit(d.time, w, d.status);
}

TransitionMatrix landmark_impl(const dataio::IdmData& d, double s, const std::vector<double>& grid, bool presmooth) {
  validate_grid(s, grid);
  TransitionMatrix out;
  out.method = presmooth ? Method::plm : Method::lm;
  out.s = s;
  out.n_states = 3;
  out.grid = grid;
  out.from_states = {1, 2};
  out.est.assign(grid.size(), std::vector<double>(9, kNaN));

  Subsample exit1, death1, death2;
  for (std::size_t i = 0; i < d.n(); ++i) {
    if (d.time1[i] > s) {
      exit1.time.push_back(d.time1[i]);
      exit1.status.push_back(d.event1[i] || d.event[i] ? 1 : 0);
      death1.time.push_back(d.stime[i]);
      death1.status.push_back(d.event[i]);
    } else if (d.event1[i] == 1 && s < d.stime[i]) {
      death2.time.push_back(d.stime[i]);
      death2.status.push_back(d.event[i]);
    }
  }

  if (exit1.time.empty()) {
    out.add_flag("EmptyLandmarkSet", "no subject is in state 1 at s");
  } else {
    const auto s11 = curve(exit1, presmooth, out, "the exit from state 1");
    const auto s1d = curve(death1, presmooth, out, "death from state 1");
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double p11 = s11.at(grid[g]);
      double p13 = 1.0 - s1d.at(grid[g]);
      double p12 = 1.0 - p11 - p13;
      if (p12 < 0.0) {
        if (p12 < -1e-12) out.add_flag("NegativeIncrement", "p12 fell below 0 and was set to 0");
        p12 = 0.0;
        p13 = 1.0 - p11;
      }
      auto& e = out.est[g];
      e[0] = p11;
      e[1] = p12;
      e[2] = p13;
    }
  }
  if (death2.time.empty()) {
    out.add_flag("EmptyLandmarkSet", "no subject is in state 2 at s");
  } else {
    const auto s22 = curve(death2, presmooth, out, "death from state 2");
    for (std::size_t g = 0; g < grid.size(); ++g) {
      auto& e = out.est[g];
      e[3] = 0.0;
      e[4] = s22.at(grid[g]);
      e[5] = 1.0 - e[4];
    }
  }
  return out;
}

}  // namespace

TransitionMatrix landmark_idm(const dataio::IdmData& data, double s, const std::vector<double>& grid) {
  return landmark_impl(data, s, grid, false);
}

TransitionMatrix presmoothed_landmark_idm(const dataio::IdmData& data, double s, const std::vector<double>& grid) {
  return landmark_impl(data, s, grid, true);
}

}  // namespace msm::msmprob
