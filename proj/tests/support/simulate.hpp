#pragma once

#include <cstdint>
#include <string>

#include "msm/dataio.hpp"
#include "msm/msmprob.hpp"

namespace msm::testing {

// Illness-death data with constant 1->2 and 1->3 hazards and uniform
// censoring. The 2->3 hazard is constant (Markov) or Weibull in the time
// since illness (semi-Markov).
struct IdmSimulation {
  std::size_t n = 400;
  double rate12 = 1.0 / 1000.0;
  double rate13 = 1.0 / 2000.0;
  double rate23 = 1.0 / 800.0;
  bool semi_markov = false;
  double weibull_shape = 2.0;
  double weibull_scale = 500.0;
  double censor_min = 500.0;
  double censor_max = 3500.0;
  bool censored = true;
};

// Columns time1, event1, Stime, event, x (a uniform covariate).
dataio::Dataset simulate_idm(const IdmSimulation& sim, std::uint64_t seed);

msmprob::Sample idm_sample(const dataio::Dataset& data);

// p11(s, t) under the simulation's constant hazards.
double true_p11(const IdmSimulation& sim, double s, double t);

dataio::Dataset csv(const std::string& text);

std::string fixture(const std::string& name);

}  // namespace msm::testing
