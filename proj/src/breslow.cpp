#include <algorithm>
#include <cmath>

#include "msm/error.hpp"
#include "msm/msmprob.hpp"

namespace msm::msmprob {

// Per-transition clock-forward Cox fits; the profile's hazard increments
// exp(x0'b) dA0(u) feed the same product integral as Aalen-Johansen.
TransitionMatrix breslow_conditional(const dataio::LongFormatData& data, double s, const std::vector<double>& grid,
                                     const std::vector<std::string>& covariates,
                                     const std::map<std::string, std::string>& profile, regression::Ties ties) {
  const auto& sys = data.system;
  const int n = sys.n_states();
  std::vector<Flag> flags;
  struct Piece {
    int from, to;
    regression::HazardIncrements inc;
    double scale;
  };
  std::vector<Piece> pieces;
  std::vector<double> times;
  for (int k = 1; k <= sys.n_transitions(); ++k) {
    const auto [h, j] = sys.endpoints(k);
    const auto cd = transition_cox_data(data, k, covariates, ClockMode::markov);
    if (std::count(cd.status.begin(), cd.status.end(), 1) == 0) {
      flags.push_back({"NoEvents", "transition " + std::to_string(h) + "->" + std::to_string(j) +
                                       " has no events; its hazard is taken as 0"});
      continue;
    }
    const auto fit = regression::fit_cox(cd, {ties});
    if (!fit.converged) flags.push_back({"NotConverged", "Cox fit for transition " + std::to_string(k) + " did not converge"});
    if (fit.any_infinite()) flags.push_back({"InfiniteCoefficient", "Cox fit for transition " + std::to_string(k) + " has a diverging coefficient"});
    double scale = 1.0;
    if (cd.design.p() > 0) scale = std::exp(regression::encode_profile(cd.design, profile).dot(fit.coef));
    auto inc = regression::breslow_increments(cd, fit.coef);
    times.insert(times.end(), inc.times.begin(), inc.times.end());
    pieces.push_back({h, j, std::move(inc), scale});
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  Increments all;
  all.n_states = n;
  all.times = times;
  all.dA.assign(times.size(), Eigen::MatrixXd::Zero(n, n));
  for (const auto& p : pieces) {
    for (std::size_t m = 0; m < p.inc.times.size(); ++m) {
      const auto k = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), p.inc.times[m]) - times.begin());
      all.dA[k](p.from - 1, p.to - 1) += p.scale * p.inc.increments[m];
    }
  }
  auto out = product_integral(all, s, grid);
  out.method = Method::breslow;
  for (int h = 1; h <= n; ++h) {
    if (!sys.absorbing(h)) out.from_states.push_back(h);
  }
  for (auto& f : flags) out.add_flag(f.code, f.message);
  return out;
}

}  // namespace msm::msmprob
