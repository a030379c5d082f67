#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "msm/dataio.hpp"
#include "msm/regression.hpp"

namespace msm::msmprob {

// Wide data for a multi-state analysis: an illness-death record set or a
// general state-column record set, plus the transition system.
struct Sample {
  dataio::TransitionSystem system;
  std::optional<dataio::IdmData> idm;
  std::optional<dataio::MsmData> msm;

  std::size_t n() const;
  const dataio::Dataset& dataset() const;
  Sample resample(std::span<const std::size_t> rows) const;
  dataio::LongFormatData long_format() const;
  // Throws RequiresIdm for general mappings.
  const dataio::IdmData& require_idm(const char* what) const;
};

Sample make_sample(const dataio::IdmData& idm, const dataio::TransitionSystem& system);
Sample make_sample(const dataio::MsmData& msm);

struct Flag {
  std::string code;
  std::string message;
};

enum class Method { aj, lm, plm, lmaj, ipcw, breslow };
Method parse_method(const std::string& name);
const char* to_string(Method m);

// Estimates p_hj(s, t) for every grid time. Matrices are n x n row-major with
// NaN for rows that were not estimated.
struct TransitionMatrix {
  Method method = Method::aj;
  double s = 0.0;
  int n_states = 0;
  std::vector<double> grid;
  std::vector<int> from_states;
  std::vector<std::vector<double>> est;
  std::vector<std::vector<double>> lower;
  std::vector<std::vector<double>> upper;
  int n_boot = 0;
  std::vector<Flag> flags;

  double at(std::size_t g, int from, int to) const {
    return est[g][static_cast<std::size_t>((from - 1) * n_states + (to - 1))];
  }
  void add_flag(std::string code, std::string message);
};

// Distinct transition times in (s, max follow-up].
std::vector<double> default_grid(const dataio::LongFormatData& data, double s);
void validate_grid(double s, const std::vector<double>& grid);

// Off-diagonal hazard increments dA(u) at ordered times u.
struct Increments {
  int n_states = 0;
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> dA;
};

// Nelson-Aalen increments d_hj(u) / n_h(u-) over the episodes of `data`,
// optionally restricted to a subset of subjects.
Increments nelson_aalen(const dataio::LongFormatData& data, const std::vector<char>* subjects = nullptr);

// Product over u in (s, t] of (I + dA(u)). Rows whose off-diagonal mass
// exceeds 1 are capped and flagged.
TransitionMatrix product_integral(const Increments& inc, double s, const std::vector<double>& grid);

TransitionMatrix aalen_johansen(const dataio::LongFormatData& data, double s, const std::vector<double>& grid);

// Aalen-Johansen on the subjects occupying `from` at time s.
TransitionMatrix landmark_aalen_johansen(const dataio::LongFormatData& data, double s, int from,
                                         const std::vector<double>& grid);

// Illness-death landmark estimators (rows 1 and 2).
TransitionMatrix landmark_idm(const dataio::IdmData& data, double s, const std::vector<double>& grid);
TransitionMatrix presmoothed_landmark_idm(const dataio::IdmData& data, double s, const std::vector<double>& grid);

struct KernelCondition {
  std::string covariate;
  double value = 0.0;
  std::optional<double> bandwidth;
};

// Kernel-weighted IPCW estimator of the illness-death rows conditional on a
// continuous covariate. With `condition` empty all subjects weigh equally.
TransitionMatrix ipcw_conditional(const dataio::IdmData& data, double s, const std::vector<double>& grid,
                                  const std::optional<KernelCondition>& condition);

// Markov plug-in estimator from per-transition Cox fits at a covariate profile.
TransitionMatrix breslow_conditional(const dataio::LongFormatData& data, double s, const std::vector<double>& grid,
                                     const std::vector<std::string>& covariates,
                                     const std::map<std::string, std::string>& profile,
                                     regression::Ties ties = regression::Ties::efron);

double gaussian_bandwidth(std::span<const double> x);

// ---- cumulative incidence ----

struct CifCondition {
  std::string covariate;
  std::optional<std::string> level;  // categorical subgroup
  std::optional<double> value;       // continuous kernel conditioning
  std::optional<double> bandwidth;
};

struct CifResult {
  std::vector<double> grid;
  std::vector<double> illness;       // having entered state 2 by t
  std::vector<double> direct_death;  // left state 1 straight to death by t
  std::vector<double> initial;       // still in state 1 at t
  std::vector<double> lower;
  std::vector<double> upper;
  int n_boot = 0;
  std::optional<CifCondition> condition;
  std::vector<Flag> flags;
};

CifResult cumulative_incidence(const dataio::IdmData& data, const std::vector<double>& grid,
                               const std::optional<CifCondition>& condition = std::nullopt);

// ---- bootstrap ----

struct BootstrapOptions {
  int n_boot = 199;
  double conf_level = 0.95;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: hardware concurrency
};

struct BootstrapResult {
  std::vector<std::vector<double>> replicates;  // successful replicates only, in index order
  int n_failed = 0;
  std::vector<double> lower;
  std::vector<double> upper;
};

// Resamples subjects with replacement; replicate b draws from a stream seeded
// by (seed, b), so results do not depend on scheduling. Estimates are flat
// vectors; NaN entries are skipped per position.
BootstrapResult bootstrap(const Sample& sample, const std::function<std::vector<double>(const Sample&)>& estimator,
                          const BootstrapOptions& options);

std::vector<std::size_t> resample_indices(std::size_t n, std::uint64_t seed, std::uint64_t replicate);

// ---- transition probabilities with intervals ----

struct TransProbRequest {
  Method method = Method::aj;
  double s = 0.0;
  std::vector<double> grid;  // empty: default grid
  std::optional<int> from_state;
  std::optional<KernelCondition> kernel;               // ipcw
  std::vector<std::string> covariates;                 // breslow
  std::map<std::string, std::string> profile;          // breslow
  regression::Ties ties = regression::Ties::efron;
  int n_boot = 0;  // 0: no intervals
  double conf_level = 0.95;
  std::uint64_t seed = 1;
};

TransitionMatrix estimate(const Sample& sample, const TransProbRequest& request);
TransitionMatrix transition_probabilities(const Sample& sample, const TransProbRequest& request);

// (from, to) pairs reported for a matrix: reachable targets of each estimated row.
std::vector<std::pair<int, int>> reported_pairs(const TransitionMatrix& m, const dataio::TransitionSystem& system);

// ---- per-transition regression ----

enum class ClockMode { markov, semi_markov };
ClockMode parse_clock(const std::string& name);
const char* to_string(ClockMode c);

regression::CoxData transition_cox_data(const dataio::LongFormatData& data, int transition,
                                        const std::vector<std::string>& covariates, ClockMode clock);

struct TransitionFit {
  int transition = 0;
  int from = 0;
  int to = 0;
  std::size_t n_rows = 0;
  std::size_t n_events = 0;
  std::optional<regression::CoxFit> fit;
  std::optional<regression::PhTestResult> ph;
  std::optional<Flag> error;  // NoEvents and other per-transition failures
};

std::vector<TransitionFit> per_transition_cox(const dataio::LongFormatData& data,
                                              const std::vector<std::string>& covariates, ClockMode clock,
                                              regression::Ties ties = regression::Ties::efron,
                                              std::optional<int> only_transition = std::nullopt);

}  // namespace msm::msmprob
