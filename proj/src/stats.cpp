#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "msm/stats.hpp"

namespace msm::stats {

double chi2_sf(double statistic, double df) {
  if (!(statistic > 0.0) || !(df > 0.0)) return 1.0;
  if (!std::isfinite(statistic)) return 0.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), statistic));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_two_sided_p(double z) {
  if (std::isnan(z)) return std::numeric_limits<double>::quiet_NaN();
  return std::min(1.0, std::erfc(std::fabs(z) / std::sqrt(2.0)));
}

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

double quantile(std::vector<double> v, double prob) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double mean(std::span<const double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

Interval percentile_interval(std::vector<double> r, double conf_level) {
  if (r.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan};
  }
  std::sort(r.begin(), r.end());
  const double alpha = 1.0 - conf_level;
  const double b1 = static_cast<double>(r.size() + 1);
  // Guard the products against representation error (e.g. 200 * 0.025).
  auto lo = static_cast<long>(std::floor(b1 * alpha / 2.0 + 1e-9));
  auto hi = static_cast<long>(std::ceil(b1 * (1.0 - alpha / 2.0) - 1e-9));
  const long b = static_cast<long>(r.size());
  lo = std::clamp(lo, 1L, b);
  hi = std::clamp(hi, 1L, b);
  return {r[static_cast<std::size_t>(lo - 1)], r[static_cast<std::size_t>(hi - 1)]};
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace msm::stats
