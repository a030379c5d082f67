#include "simulate.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace msm::testing {

dataio::Dataset simulate_idm(const IdmSimulation& sim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> leave(sim.rate12 + sim.rate13);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> death(sim.rate23);
  std::weibull_distribution<double> sojourn(sim.weibull_shape, sim.weibull_scale);
  std::uniform_real_distribution<double> censor(sim.censor_min, sim.censor_max);

  std::ostringstream out;
  out.precision(17);
  out << "time1,event1,Stime,event,x\n";
  for (std::size_t i = 0; i < sim.n; ++i) {
    const double t1 = leave(rng);
    const bool ill = unit(rng) < sim.rate12 / (sim.rate12 + sim.rate13);
    const double stay = sim.semi_markov ? sojourn(rng) : death(rng);
    const double c = sim.censored ? censor(rng) : std::numeric_limits<double>::infinity();
    const double x = unit(rng);
    const double t_death = ill ? t1 + stay : t1;
    double time1, stime;
    int event1, event;
    if (c < t1) {
      time1 = stime = c;
      event1 = event = 0;
    } else if (!ill) {
      time1 = stime = t1;
      event1 = 0;
      event = 1;
    } else {
      time1 = t1;
      event1 = 1;
      stime = std::min(c, t_death);
      event = t_death <= c ? 1 : 0;
    }
    out << time1 << ',' << event1 << ',' << stime << ',' << event << ',' << x << '\n';
  }
  return dataio::parse_csv(out.str());
}

msmprob::Sample idm_sample(const dataio::Dataset& data) {
  const auto idm = dataio::bind_idm(data, {"time1", "event1", "Stime", "event", {"x"}});
  return msmprob::make_sample(idm, dataio::idm_transition_system());
}

double true_p11(const IdmSimulation& sim, double s, double t) { return std::exp(-(sim.rate12 + sim.rate13) * (t - s)); }

dataio::Dataset csv(const std::string& text) { return dataio::parse_csv(text); }

std::string fixture(const std::string& name) { return std::string(MSM_FIXTURE_DIR) + "/" + name; }

}  // namespace msm::testing
