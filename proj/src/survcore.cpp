#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Dense>

#include "msm/error.hpp"
#include "msm/stats.hpp"
#include "msm/survcore.hpp"

namespace msm::survcore {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

ConfType parse_conf_type(const std::string& name) {
  if (name == "plain") return ConfType::plain;
  if (name == "log") return ConfType::log;
  if (name == "log-log" || name == "loglog") return ConfType::loglog;
  fail_validation("InvalidParameter", "conf_type must be plain, log or log-log", {{"conf_type", name}});
}

const char* to_string(ConfType type) {
  switch (type) {
    case ConfType::plain: return "plain";
    case ConfType::log: return "log";
    case ConfType::loglog: return "log-log";
  }
  return "log";
}

double SurvCurve::at(double t) const {
  double s = 1.0;
  for (const auto& p : points) {
    if (p.time > t) break;
    s = p.surv;
  }
  return s;
}

double StepFunction::at(double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return initial;
  return values[static_cast<std::size_t>(it - times.begin() - 1)];
}

SurvCurve km_curve(std::span<const double> time, std::span<const int> status, double conf_level,
                   ConfType conf_type) {
  SurvCurve curve;
  curve.n = time.size();
  std::vector<std::size_t> order(time.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return time[a] < time[b]; });

  const double z = stats::normal_quantile(0.5 + conf_level / 2.0);
  double surv = 1.0;
  double greenwood = 0.0;  // sum d / (n (n - d))
  double at_risk = static_cast<double>(time.size());
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = time[order[i]];
    double d = 0.0;
    double leaving = 0.0;
    while (i < order.size() && time[order[i]] == t) {
      d += status[order[i]] ? 1.0 : 0.0;
      leaving += 1.0;
      ++i;
    }
    if (d > 0.0) {
      surv *= 1.0 - d / at_risk;
      SurvPoint p;
      p.time = t;
      p.n_risk = at_risk;
      p.n_event = d;
      p.surv = surv;
      if (at_risk > d) {
        greenwood += d / (at_risk * (at_risk - d));
      } else {
        greenwood = std::numeric_limits<double>::infinity();
      }
      if (surv > 0.0) {
        const double se_log = std::sqrt(greenwood);
        p.se = surv * se_log;
        switch (conf_type) {
          case ConfType::plain:
            p.lower = std::max(0.0, surv - z * p.se);
            p.upper = std::min(1.0, surv + z * p.se);
            break;
          case ConfType::log:
            p.lower = std::exp(std::log(surv) - z * se_log);
            p.upper = std::min(1.0, std::exp(std::log(surv) + z * se_log));
            break;
          case ConfType::loglog:
            if (surv < 1.0) {
              const double hw = z * se_log / std::fabs(std::log(surv));
              p.lower = std::exp(-std::exp(std::log(-std::log(surv)) + hw));
              p.upper = std::exp(-std::exp(std::log(-std::log(surv)) - hw));
            } else {
              p.lower = p.upper = 1.0;
            }
            break;
        }
      } else {
        p.se = kNaN;
        p.lower = kNaN;
        p.upper = kNaN;
      }
      curve.points.push_back(p);
    }
    at_risk -= leaving;
  }
  curve.no_events = curve.points.empty();
  return curve;
}

Factor factor_of(const dataio::Dataset& data, const std::string& name) {
  const auto* col = data.find(name);
  if (!col) fail_validation("UnknownGroupColumn", "no column named '" + name + "'", {{"column", name}});
  Factor f;
  const std::size_t n = data.n_rows();
  f.codes.assign(n, -1);
  if (col->kind == dataio::ColumnKind::categorical) {
    f.codes = col->codes;
    f.labels = col->levels;
  } else if (col->kind == dataio::ColumnKind::numeric) {
    std::map<double, std::string> distinct;
    for (std::size_t i = 0; i < n; ++i) {
      if (!col->is_missing(i)) distinct.emplace(col->numeric[i], col->raw[i]);
    }
    std::map<double, int> index;
    for (const auto& [v, label] : distinct) {
      index[v] = static_cast<int>(f.labels.size());
      f.labels.push_back(label);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!col->is_missing(i)) f.codes[i] = index[col->numeric[i]];
    }
  } else {
    fail_validation("UnknownGroupColumn", "column '" + name + "' is free text, not a grouping variable",
                    {{"column", name}});
  }
  return f;
}

std::vector<SurvCurve> kaplan_meier(const dataio::SurvivalData& data, const KmOptions& options) {
  if (data.n() == 0) fail_validation("NoData", "no complete rows to estimate from");
  if (!options.group_by) {
    return {km_curve(data.time, data.status, options.conf_level, options.conf_type)};
  }
  Factor f = factor_of(data.data, *options.group_by);
  std::vector<SurvCurve> curves;
  for (std::size_t g = 0; g < f.labels.size(); ++g) {
    std::vector<double> t;
    std::vector<int> s;
    for (std::size_t i = 0; i < data.n(); ++i) {
      if (f.codes[i] == static_cast<int>(g)) {
        t.push_back(data.time[i]);
        s.push_back(data.status[i]);
      }
    }
    if (t.empty()) continue;
    auto c = km_curve(t, s, options.conf_level, options.conf_type);
    c.group = f.labels[g];
    curves.push_back(std::move(c));
  }
  return curves;
}

StepFunction product_limit(std::span<const double> time, std::span<const int> status) {
  StepFunction sf;
  std::vector<std::size_t> order(time.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return time[a] < time[b]; });
  double surv = 1.0;
  double at_risk = static_cast<double>(time.size());
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = time[order[i]];
    double d = 0.0;
    double leaving = 0.0;
    while (i < order.size() && time[order[i]] == t) {
      d += status[order[i]] ? 1.0 : 0.0;
      leaving += 1.0;
      ++i;
    }
    if (d > 0.0) {
      surv *= 1.0 - d / at_risk;
      sf.times.push_back(t);
      sf.values.push_back(surv);
    }
    at_risk -= leaving;
  }
  return sf;
}

StepFunction weighted_product_limit(std::span<const double> time, std::span<const double> m,
                                    std::span<const int> tie_order) {
  StepFunction sf;
  const std::size_t n = time.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    if (time[a] != time[b]) return time[a] < time[b];
    return tie_order[a] > tie_order[b];
  });
  double surv = 1.0;
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = order[r];
    const double left = static_cast<double>(n - r);
    surv *= 1.0 - m[i] / left;
    if (!sf.times.empty() && sf.times.back() == time[i]) {
      sf.values.back() = surv;
    } else if (m[i] > 0.0) {
      sf.times.push_back(time[i]);
      sf.values.push_back(surv);
    }
  }
  return sf;
}

RankTestResult rank_test(std::span<const double> time, std::span<const int> status, std::span<const int> group,
                         const std::vector<std::string>& labels, double rho) {
  const std::size_t k_all = labels.size();
  RankTestResult res;
  res.rho = rho;

  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < time.size(); ++i) {
    if (group[i] >= 0) idx.push_back(i);
  }
  std::vector<std::size_t> size(k_all, 0);
  for (auto i : idx) ++size[static_cast<std::size_t>(group[i])];
  std::vector<int> remap(k_all, -1);
  std::vector<std::size_t> used;
  for (std::size_t g = 0; g < k_all; ++g) {
    if (size[g] > 0) {
      remap[g] = static_cast<int>(used.size());
      used.push_back(g);
    }
  }
  const std::size_t k = used.size();
  if (k < 2) fail_computation("SingleGroup", "rank test needs at least two non-empty groups", {{"groups", k}});

  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return time[a] < time[b]; });
  Eigen::VectorXd obs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  Eigen::VectorXd exp = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  Eigen::MatrixXd var = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  Eigen::VectorXd risk = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  for (auto i : idx) risk[remap[static_cast<std::size_t>(group[i])]] += 1.0;

  double km = 1.0;  // pooled left-continuous Kaplan-Meier for the G-rho weight
  double total_events = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    const double t = time[idx[i]];
    Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    Eigen::VectorXd leaving = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    while (i < idx.size() && time[idx[i]] == t) {
      const int g = remap[static_cast<std::size_t>(group[idx[i]])];
      if (status[idx[i]]) d[g] += 1.0;
      leaving[g] += 1.0;
      ++i;
    }
    const double dt = d.sum();
    const double nt = risk.sum();
    if (dt > 0.0) {
      total_events += dt;
      const double w = rho == 0.0 ? 1.0 : std::pow(km, rho);
      const Eigen::VectorXd frac = risk / nt;
      obs += w * d;
      exp += w * dt * frac;
      if (nt > 1.0) {
        const double c = w * w * dt * (nt - dt) / (nt - 1.0);
        var += c * (Eigen::MatrixXd(frac.asDiagonal()) - frac * frac.transpose());
      }
      km *= 1.0 - dt / nt;
    }
    risk -= leaving;
  }
  if (total_events == 0.0) fail_computation("NoEvents", "no events observed in any group");

  const auto m = static_cast<Eigen::Index>(k - 1);
  const Eigen::VectorXd diff = (obs - exp).head(m);
  const Eigen::MatrixXd v = var.topLeftCorner(m, m);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(v);
  const double chi = diff.dot(cod.solve(diff));
  res.chi_squared = std::max(0.0, chi);
  res.df = static_cast<int>(k - 1);
  res.p_value = stats::chi2_sf(res.chi_squared, res.df);
  for (std::size_t g = 0; g < k; ++g) {
    res.groups.push_back({labels[used[g]], size[used[g]], obs[static_cast<Eigen::Index>(g)], exp[static_cast<Eigen::Index>(g)]});
  }
  return res;
}

RankTestResult rank_test(const dataio::SurvivalData& data, const std::string& group_by, double rho) {
  Factor f = factor_of(data.data, group_by);
  return rank_test(data.time, data.status, f.codes, f.labels, rho);
}

}  // namespace msm::survcore
