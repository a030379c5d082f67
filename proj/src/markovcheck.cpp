#include "msm/markovcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "msm/error.hpp"
#include "msm/stats.hpp"

namespace msm::markovcheck {

Comparator parse_comparator(const std::string& name) {
  if (name == "auto" || name == "automatic") return Comparator::automatic;
  if (name == "lm") return Comparator::lm;
  if (name == "lmaj") return Comparator::lmaj;
  fail_validation("InvalidParameter", "comparator must be auto, lm or lmaj", {{"comparator", name}});
}

const char* to_string(Comparator c) {
  switch (c) {
    case Comparator::automatic: return "auto";
    case Comparator::lm: return "lm";
    case Comparator::lmaj: return "lmaj";
  }
  return "auto";
}

namespace {

void check_states(const msmprob::Sample& sample, int from, int to) {
  const int n = sample.system.n_states();
  if (from < 1 || from > n || to < 1 || to > n) {
    fail_validation("InvalidTransition", "states out of range", {{"from", from}, {"to", to}, {"n_states", n}});
  }
  if (sample.system.absorbing(from)) {
    fail_validation("InvalidTransition", "state " + std::to_string(from) + " is absorbing", {{"from", from}});
  }
}

Comparator resolve(const msmprob::Sample& sample, Comparator c) {
  if (c == Comparator::automatic) return sample.idm ? Comparator::lm : Comparator::lmaj;
  if (c == Comparator::lm) sample.require_idm("the landmark comparator");
  return c;
}

}  // namespace

double step_integral_difference(const std::vector<double>& grid, const std::vector<double>& a,
                                const std::vector<double>& b, double t_max) {
  double area = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (grid[g] >= t_max) break;
    const double end = g + 1 < grid.size() ? std::min(grid[g + 1], t_max) : t_max;
    area += (a[g] - b[g]) * (end - grid[g]);
  }
  return area;
}

double auc_discrepancy(const msmprob::Sample& sample, double s, int from, int to, Comparator comparator) {
  const auto data = sample.long_format();
  const auto grid = msmprob::default_grid(data, s);
  double t_max = s;
  for (const auto& e : data.episodes) t_max = std::max(t_max, e.tstop);
  if (grid.empty()) return 0.0;
  const auto aj = msmprob::aalen_johansen(data, s, grid);
  const auto other = comparator == Comparator::lm ? msmprob::landmark_idm(sample.require_idm("the landmark comparator"), s, grid)
                                                  : msmprob::landmark_aalen_johansen(data, s, from, grid);
  std::vector<double> a(grid.size()), b(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    a[g] = aj.at(g, from, to);
    b[g] = other.at(g, from, to);
    if (!std::isfinite(b[g])) {
      fail_computation("EmptyLandmarkSet", "no subject occupies state " + std::to_string(from) + " at s",
                       {{"s", s}, {"from", from}});
    }
  }
  return step_integral_difference(grid, a, b, t_max);
}

LocalTestResult local_auc_test(const msmprob::Sample& sample, double s, int from, int to, const LocalAucOptions& opt) {
  check_states(sample, from, to);
  const Comparator cmp = resolve(sample, opt.comparator);
  if (cmp == Comparator::lm && from > 2) {
    fail_validation("InvalidTransition", "the landmark comparator covers transitions from states 1 and 2", {{"from", from}});
  }
  LocalTestResult res;
  res.method = "auc";
  res.s = s;
  res.from = from;
  res.to = to;
  res.comparator = to_string(cmp);
  res.statistic = auc_discrepancy(sample, s, from, to, cmp);
  const auto boot = msmprob::bootstrap(
      sample, [&](const msmprob::Sample& x) { return std::vector<double>{auc_discrepancy(x, s, from, to, cmp)}; },
      {opt.n_boot, 0.95, opt.seed, 0});
  std::vector<double> reps;
  for (const auto& r : boot.replicates) reps.push_back(r[0]);
  res.n_boot = opt.n_boot;
  res.n_failed = boot.n_failed;
  res.sd = stats::sd(reps);
  if (boot.n_failed > 0) {
    res.flags.push_back({"BootstrapFailures", std::to_string(boot.n_failed) + " bootstrap replicates failed and were dropped"});
  }
  if (!(res.sd > 0.0)) {
    res.p_value = 1.0;
    res.flags.push_back({"DegenerateVariance", "bootstrap standard deviation is 0"});
  } else {
    res.p_value = stats::normal_two_sided_p(res.statistic / res.sd);
  }
  return res;
}

namespace {

struct LandmarkGroups {
  std::vector<double> time;
  std::vector<int> status;
  std::vector<int> group;
  double split = 0.0;
};

// Subjects in `from` at s, split at the median entry time into `from`.
LandmarkGroups history_groups(const dataio::LongFormatData& data, double s, int from, int to) {
  LandmarkGroups lg;
  std::vector<double> entry;
  for (const auto& e : data.episodes) {
    if (e.state == from && e.tstart <= s && s < e.tstop) {
      entry.push_back(e.tstart);
      lg.time.push_back(e.tstop);
      lg.status.push_back(e.to == to ? 1 : 0);
    }
  }
  if (entry.empty()) {
    fail_computation("EmptyLandmarkSet", "no subject occupies state " + std::to_string(from) + " at s", {{"s", s}});
  }
  lg.split = stats::quantile(entry, 0.5);
  int late = 0;
  for (double x : entry) {
    lg.group.push_back(x <= lg.split ? 0 : 1);
    late += lg.group.back();
  }
  if (late == 0 || late == static_cast<int>(entry.size())) {
    fail_computation("SingleGroup", "entry times into state " + std::to_string(from) + " do not split into two groups",
                     {{"s", s}, {"n", entry.size()}});
  }
  if (std::find(lg.status.begin(), lg.status.end(), 1) == lg.status.end()) {
    fail_computation("NoEvents", "no " + std::to_string(from) + "->" + std::to_string(to) + " transitions after s",
                     {{"s", s}});
  }
  return lg;
}

}  // namespace

LocalTestResult local_logrank_test(const msmprob::Sample& sample, double s, int from, int to) {
  check_states(sample, from, to);
  const auto lg = history_groups(sample.long_format(), s, from, to);
  const auto rt = survcore::rank_test(lg.time, lg.status, lg.group, {"early entry", "late entry"});
  LocalTestResult res;
  res.method = "logrank";
  res.s = s;
  res.from = from;
  res.to = to;
  res.statistic = rt.chi_squared;
  res.df = rt.df;
  res.p_value = rt.p_value;
  res.split = lg.split;
  res.groups = rt.groups;
  return res;
}

GlobalCoxResult global_cox_test(const msmprob::Sample& sample, int from, int to, msmprob::ClockMode clock,
                                regression::Ties ties) {
  check_states(sample, from, to);
  const int k = sample.system.transition(from, to);
  if (k == 0) {
    fail_validation("InvalidTransition", "no direct transition " + std::to_string(from) + "->" + std::to_string(to),
                    {{"from", from}, {"to", to}});
  }
  const auto data = sample.long_format();
  regression::CoxData cd;
  std::vector<double> entry;
  for (const auto& row : data.rows) {
    if (row.trans != k) continue;
    cd.start.push_back(clock == msmprob::ClockMode::markov ? row.tstart : 0.0);
    cd.stop.push_back(clock == msmprob::ClockMode::markov ? row.tstop : row.duration);
    cd.status.push_back(row.status);
    entry.push_back(row.tstart);
  }
  cd.design.n = entry.size();
  cd.design.append_column("entry_time", entry);
  cd.design.terms.push_back({"entry_time", {0}, false, {}});
  if (entry.size() < 2 || !(stats::sd(entry) > 0.0)) {
    fail_computation("DegenerateCovariate", "entry time into state " + std::to_string(from) + " does not vary",
                     {{"from", from}});
  }
  GlobalCoxResult res;
  res.from = from;
  res.to = to;
  res.clock = clock;
  res.fit = regression::fit_cox(cd, {ties});
  res.coef = res.fit.coef[0];
  res.hr = res.fit.hr[0];
  res.se = res.fit.se[0];
  res.z = res.fit.z[0];
  res.p_value = res.fit.p[0];
  res.n_rows = res.fit.n;
  res.n_events = res.fit.n_events;
  return res;
}

std::vector<double> default_percentiles() { return {5, 10, 20, 30, 40, 50, 60, 70, 80, 90}; }

std::vector<double> percentile_landmarks(const msmprob::Sample& sample, int from, const std::vector<double>& percentiles) {
  const auto data = sample.long_format();
  std::vector<double> exits;
  for (const auto& e : data.episodes) {
    if (e.state == from && e.to) exits.push_back(e.tstop);
  }
  if (exits.empty()) {
    fail_computation("NoEvents", "no observed exits from state " + std::to_string(from), {{"from", from}});
  }
  std::vector<double> out;
  for (double p : percentiles) {
    if (!(p > 0.0 && p < 100.0)) fail_validation("InvalidParameter", "percentiles must lie in (0, 100)", {{"percentile", p}});
    out.push_back(stats::quantile(exits, p / 100.0));
  }
  return out;
}

GlobalAucResult global_auc_test(const msmprob::Sample& sample, int from, int to, const GlobalAucOptions& opt) {
  check_states(sample, from, to);
  if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) fail_validation("InvalidParameter", "alpha must lie in (0, 1)", {{"alpha", opt.alpha}});
  const auto svals = percentile_landmarks(sample, from, opt.percentiles);
  GlobalAucResult res;
  res.from = from;
  res.to = to;
  res.alpha = opt.alpha;
  res.n_boot = opt.n_boot;
  res.seed = opt.seed;
  for (std::size_t i = 0; i < svals.size(); ++i) {
    try {
      auto local = local_auc_test(sample, svals[i], from, to, {opt.n_boot, stats::substream_seed(opt.seed, i), opt.comparator});
      res.percentiles.push_back(opt.percentiles[i]);
      res.s_values.push_back(svals[i]);
      res.p_values.push_back(local.p_value);
      res.local.push_back(std::move(local));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::computation) throw;
      ++res.dropped;
      res.flags.push_back({e.code(), "landmark at percentile " + std::to_string(opt.percentiles[i]) + " dropped: " + e.what()});
    }
  }
  if (res.s_values.size() < 2) {
    fail_computation("TooFewLandmarks", "fewer than 2 usable landmark times", {{"usable", res.s_values.size()}});
  }
  const auto rejections = std::count_if(res.p_values.begin(), res.p_values.end(), [&](double p) { return p < opt.alpha; });
  res.proportion_rejections = static_cast<double>(rejections) / static_cast<double>(res.p_values.size());
  return res;
}

double logrank_two_group(std::span<const double> time, std::span<const int> status, std::span<const int> group) {
  const std::size_t n = time.size();
  double n_all = static_cast<double>(n);
  double n1 = 0.0;
  for (int g : group) n1 += g;
  double oe = 0.0, var = 0.0;
  std::size_t i = 0;
  while (i < n) {
    const double t = time[i];
    double d = 0.0, d1 = 0.0, leave = 0.0, leave1 = 0.0;
    for (; i < n && time[i] == t; ++i) {
      leave += 1.0;
      leave1 += group[i];
      if (status[i]) {
        d += 1.0;
        d1 += group[i];
      }
    }
    if (d > 0.0 && n_all > 0.0) {
      const double frac = n1 / n_all;
      oe += d1 - d * frac;
      if (n_all > 1.0) var += d * frac * (1.0 - frac) * (n_all - d) / (n_all - 1.0);
    }
    n_all -= leave;
    n1 -= leave1;
  }
  return var > 0.0 ? oe * oe / var : 0.0;
}

GlobalLogrankResult global_logrank_test(const msmprob::Sample& sample, int from, int to, const GlobalLogrankOptions& opt) {
  check_states(sample, from, to);
  if (opt.n_perm < 1) fail_validation("InvalidParameter", "n_perm must be positive", {{"n_perm", opt.n_perm}});
  const auto svals = percentile_landmarks(sample, from, opt.percentiles);
  const auto data = sample.long_format();
  GlobalLogrankResult res;
  res.from = from;
  res.to = to;
  res.n_perm = opt.n_perm;
  res.seed = opt.seed;
  std::vector<LandmarkGroups> sets;
  for (std::size_t i = 0; i < svals.size(); ++i) {
    try {
      auto lg = history_groups(data, svals[i], from, to);
      // sort by time once; permutations only move the labels
      std::vector<std::size_t> order(lg.time.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return lg.time[a] < lg.time[b]; });
      LandmarkGroups sorted;
      sorted.split = lg.split;
      for (auto k : order) {
        sorted.time.push_back(lg.time[k]);
        sorted.status.push_back(lg.status[k]);
        sorted.group.push_back(lg.group[k]);
      }
      res.percentiles.push_back(opt.percentiles[i]);
      res.s_values.push_back(svals[i]);
      res.statistics.push_back(logrank_two_group(sorted.time, sorted.status, sorted.group));
      sets.push_back(std::move(sorted));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::computation) throw;
      ++res.dropped;
      res.flags.push_back({e.code(), "landmark at percentile " + std::to_string(opt.percentiles[i]) + " dropped: " + e.what()});
    }
  }
  if (sets.empty()) fail_computation("TooFewLandmarks", "no usable landmark times");
  res.statistic = *std::max_element(res.statistics.begin(), res.statistics.end());
  const double threshold = res.statistic * (1.0 - 1e-10);
  int exceed = 0;
  std::vector<int> labels;
  for (int b = 0; b < opt.n_perm; ++b) {
    std::mt19937_64 rng(stats::substream_seed(opt.seed, static_cast<std::uint64_t>(b)));
    double top = 0.0;
    for (const auto& set : sets) {
      labels = set.group;
      std::shuffle(labels.begin(), labels.end(), rng);
      top = std::max(top, logrank_two_group(set.time, set.status, labels));
    }
    if (top >= threshold) ++exceed;
  }
  res.p_value = (1.0 + exceed) / (1.0 + opt.n_perm);
  return res;
}

}  // namespace msm::markovcheck
