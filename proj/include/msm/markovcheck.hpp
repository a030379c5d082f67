#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "msm/msmprob.hpp"
#include "msm/survcore.hpp"

namespace msm::markovcheck {

using msmprob::Flag;

// Markov-free comparator for the AUC test. `automatic` uses the landmark
// estimator for illness-death data and landmark Aalen-Johansen otherwise.
enum class Comparator { automatic, lm, lmaj };
Comparator parse_comparator(const std::string& name);
const char* to_string(Comparator c);

struct LocalAucOptions {
  int n_boot = 100;
  std::uint64_t seed = 1;
  Comparator comparator = Comparator::automatic;
};

struct LocalTestResult {
  std::string method;  // auc | logrank
  double s = 0.0;
  int from = 0;
  int to = 0;
  double statistic = 0.0;  // signed area (auc) or chi-squared (logrank)
  double p_value = 1.0;
  // auc
  double sd = std::numeric_limits<double>::quiet_NaN();
  int n_boot = 0;
  int n_failed = 0;
  std::string comparator;
  // logrank
  int df = 0;
  double split = std::numeric_limits<double>::quiet_NaN();
  std::vector<survcore::RankGroup> groups;
  std::vector<Flag> flags;
};

// Integral up to t_max of the step function equal to a[g] - b[g] on
// [grid[g], grid[g+1]) and zero before grid[0].
double step_integral_difference(const std::vector<double>& grid, const std::vector<double>& a,
                                const std::vector<double>& b, double t_max);

// Signed area between the Aalen-Johansen and the Markov-free estimate of
// p_{from,to}(s, .) up to the last follow-up time.
double auc_discrepancy(const msmprob::Sample& sample, double s, int from, int to, Comparator comparator);

LocalTestResult local_auc_test(const msmprob::Sample& sample, double s, int from, int to,
                               const LocalAucOptions& options = {});

LocalTestResult local_logrank_test(const msmprob::Sample& sample, double s, int from, int to);

struct GlobalCoxResult {
  int from = 0;
  int to = 0;
  msmprob::ClockMode clock = msmprob::ClockMode::markov;
  double coef = 0.0;
  double hr = 1.0;
  double se = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  std::size_t n_rows = 0;
  std::size_t n_events = 0;
  regression::CoxFit fit;
};

GlobalCoxResult global_cox_test(const msmprob::Sample& sample, int from, int to,
                                msmprob::ClockMode clock = msmprob::ClockMode::markov,
                                regression::Ties ties = regression::Ties::efron);

std::vector<double> default_percentiles();

// Landmark times at the given percentiles (in %) of the observed exit times
// from `from`.
std::vector<double> percentile_landmarks(const msmprob::Sample& sample, int from, const std::vector<double>& percentiles);

struct GlobalAucOptions {
  std::vector<double> percentiles = default_percentiles();
  int n_boot = 100;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  Comparator comparator = Comparator::automatic;
};

struct GlobalAucResult {
  int from = 0;
  int to = 0;
  std::vector<double> percentiles;  // of the usable landmarks
  std::vector<double> s_values;
  std::vector<double> p_values;
  std::vector<LocalTestResult> local;
  int dropped = 0;
  double alpha = 0.05;
  double proportion_rejections = 0.0;
  int n_boot = 0;
  std::uint64_t seed = 0;
  std::vector<Flag> flags;
};

GlobalAucResult global_auc_test(const msmprob::Sample& sample, int from, int to, const GlobalAucOptions& options = {});

struct GlobalLogrankOptions {
  std::vector<double> percentiles = default_percentiles();
  int n_perm = 500;
  std::uint64_t seed = 1;
};

struct GlobalLogrankResult {
  int from = 0;
  int to = 0;
  std::vector<double> percentiles;
  std::vector<double> s_values;
  std::vector<double> statistics;
  double statistic = 0.0;  // maximum over s
  double p_value = 1.0;
  int n_perm = 0;
  int dropped = 0;
  std::uint64_t seed = 0;
  std::vector<Flag> flags;
};

GlobalLogrankResult global_logrank_test(const msmprob::Sample& sample, int from, int to,
                                        const GlobalLogrankOptions& options = {});

// Two-group log-rank chi-squared for observations sorted by time.
double logrank_two_group(std::span<const double> time, std::span<const int> status, std::span<const int> group);

}  // namespace msm::markovcheck
