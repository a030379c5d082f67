#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace msm::stats {

// Upper tail of the chi-squared distribution; 1 for statistics <= 0.
double chi2_sf(double statistic, double df);
double normal_cdf(double z);
// Two-sided normal p-value for a z statistic.
double normal_two_sided_p(double z);
double normal_quantile(double p);

// Type-7 sample quantile (linear interpolation between order statistics).
double quantile(std::vector<double> values, double prob);

double mean(std::span<const double> v);
// Sample standard deviation (n - 1 denominator); 0 for n < 2.
double sd(std::span<const double> v);

// Percentile bootstrap interval using order statistics
// floor((B+1)a/2) and ceil((B+1)(1-a/2)), clamped to 1..B.
struct Interval {
  double lower;
  double upper;
};
Interval percentile_interval(std::vector<double> replicates, double conf_level);

// SplitMix64 finaliser; seeds per-replicate substreams from (seed, index).
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace msm::stats
