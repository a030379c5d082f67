#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "msm/error.hpp"
#include "msm/msmprob.hpp"

namespace msm::msmprob {

Method parse_method(const std::string& name) {
  if (name == "aj") return Method::aj;
  if (name == "lm") return Method::lm;
  if (name == "plm") return Method::plm;
  if (name == "lmaj") return Method::lmaj;
  if (name == "ipcw") return Method::ipcw;
  if (name == "breslow") return Method::breslow;
  fail_validation("InvalidParameter", "method must be one of aj, lm, plm, lmaj, ipcw, breslow", {{"method", name}});
}

const char* to_string(Method m) {
  switch (m) {
    case Method::aj: return "aj";
    case Method::lm: return "lm";
    case Method::plm: return "plm";
    case Method::lmaj: return "lmaj";
    case Method::ipcw: return "ipcw";
    case Method::breslow: return "breslow";
  }
  return "aj";
}

void TransitionMatrix::add_flag(std::string code, std::string message) {
  for (const auto& f : flags) {
    if (f.code == code && f.message == message) return;
  }
  flags.push_back({std::move(code), std::move(message)});
}

std::vector<double> default_grid(const dataio::LongFormatData& data, double s) {
  std::set<double> times;
  for (const auto& e : data.episodes) {
    if (e.to && e.tstop > s) times.insert(e.tstop);
  }
  return {times.begin(), times.end()};
}

void validate_grid(double s, const std::vector<double>& grid) {
  if (!std::isfinite(s) || s < 0.0) fail_validation("InvalidParameter", "s must be a finite time >= 0", {{"s", s}});
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i]) || grid[i] < s) {
      fail_validation("InvalidGrid", "grid times must be finite and >= s", {{"s", s}, {"t", grid[i]}});
    }
    if (i > 0 && grid[i] <= grid[i - 1]) {
      fail_validation("InvalidGrid", "grid times must be strictly increasing", {{"grid", grid}});
    }
  }
}

Increments nelson_aalen(const dataio::LongFormatData& data, const std::vector<char>* subjects) {
  const int n = data.system.n_states();
  const auto un = static_cast<std::size_t>(n);
  Increments inc;
  inc.n_states = n;
  std::vector<std::vector<double>> starts(un + 1), stops(un + 1);
  std::vector<const dataio::Episode*> events;
  for (const auto& e : data.episodes) {
    if (subjects && !(*subjects)[static_cast<std::size_t>(e.subject)]) continue;
    starts[static_cast<std::size_t>(e.state)].push_back(e.tstart);
    stops[static_cast<std::size_t>(e.state)].push_back(e.tstop);
    if (e.to) events.push_back(&e);
  }
  for (std::size_t h = 1; h <= un; ++h) {
    std::sort(starts[h].begin(), starts[h].end());
    std::sort(stops[h].begin(), stops[h].end());
  }
  for (const auto* e : events) inc.times.push_back(e->tstop);
  std::sort(inc.times.begin(), inc.times.end());
  inc.times.erase(std::unique(inc.times.begin(), inc.times.end()), inc.times.end());
  inc.dA.assign(inc.times.size(), Eigen::MatrixXd::Zero(n, n));
  for (const auto* e : events) {
    const auto k = static_cast<std::size_t>(std::lower_bound(inc.times.begin(), inc.times.end(), e->tstop) - inc.times.begin());
    inc.dA[k](e->state - 1, e->to - 1) += 1.0;
  }
  // n_h(u-) = #{tstart < u} - #{tstop < u}
  for (std::size_t k = 0; k < inc.times.size(); ++k) {
    const double u = inc.times[k];
    for (std::size_t h = 1; h <= un; ++h) {
      const auto entered = std::lower_bound(starts[h].begin(), starts[h].end(), u) - starts[h].begin();
      const auto left = std::lower_bound(stops[h].begin(), stops[h].end(), u) - stops[h].begin();
      const auto at_risk = static_cast<double>(entered - left);
      if (at_risk > 0) inc.dA[k].row(static_cast<Eigen::Index>(h - 1)) /= at_risk;
    }
  }
  return inc;
}

TransitionMatrix product_integral(const Increments& inc, double s, const std::vector<double>& grid) {
  validate_grid(s, grid);
  const int n = inc.n_states;
  TransitionMatrix out;
  out.s = s;
  out.n_states = n;
  out.grid = grid;
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd step(n, n);
  std::size_t k = static_cast<std::size_t>(std::upper_bound(inc.times.begin(), inc.times.end(), s) - inc.times.begin());
  for (double t : grid) {
    for (; k < inc.times.size() && inc.times[k] <= t; ++k) {
      step = inc.dA[k];
      for (int h = 0; h < n; ++h) {
        step(h, h) = 0.0;
        double off = step.row(h).sum();
        if (off > 1.0) {
          step.row(h) /= off;
          off = 1.0;
          out.add_flag("NegativeDiagonal", "hazard increments out of state " + std::to_string(h + 1) +
                                               " exceeded 1 and were capped");
        }
        step(h, h) = 1.0 - off;
      }
      P = P * step;
    }
    std::vector<double> flat(static_cast<std::size_t>(n * n));
    for (int h = 0; h < n; ++h) {
      for (int j = 0; j < n; ++j) flat[static_cast<std::size_t>(h * n + j)] = P(h, j);
    }
    out.est.push_back(std::move(flat));
  }
  return out;
}

namespace {

// Probability mass left in a state after its last follow-up stays there; the
// estimate is then flat and flagged.
void flag_exhausted(TransitionMatrix& m, const dataio::LongFormatData& data, const std::vector<char>* subjects) {
  const int n = m.n_states;
  std::vector<double> last(static_cast<std::size_t>(n + 1), -std::numeric_limits<double>::infinity());
  for (const auto& e : data.episodes) {
    if (subjects && !(*subjects)[static_cast<std::size_t>(e.subject)]) continue;
    auto& l = last[static_cast<std::size_t>(e.state)];
    l = std::max(l, e.tstop);
  }
  for (std::size_t g = 0; g < m.grid.size(); ++g) {
    for (int h = 1; h <= n; ++h) {
      if (data.system.absorbing(h) || m.grid[g] <= last[static_cast<std::size_t>(h)]) continue;
      for (int r : m.from_states) {
        const double v = m.at(g, r, h);
        if (std::isfinite(v) && v > 1e-12) {
          m.add_flag("EmptyRiskSet", "no subjects under follow-up in state " + std::to_string(h) +
                                         " beyond t = " + std::to_string(last[static_cast<std::size_t>(h)]) +
                                         "; estimates held constant");
          break;
        }
      }
    }
  }
}

std::vector<int> non_absorbing(const dataio::TransitionSystem& sys) {
  std::vector<int> out;
  for (int h = 1; h <= sys.n_states(); ++h) {
    if (!sys.absorbing(h)) out.push_back(h);
  }
  return out;
}

}  // namespace

TransitionMatrix aalen_johansen(const dataio::LongFormatData& data, double s, const std::vector<double>& grid) {
  auto m = product_integral(nelson_aalen(data), s, grid);
  m.method = Method::aj;
  m.from_states = non_absorbing(data.system);
  flag_exhausted(m, data, nullptr);
  return m;
}

TransitionMatrix landmark_aalen_johansen(const dataio::LongFormatData& data, double s, int from,
                                         const std::vector<double>& grid) {
  const int n = data.system.n_states();
  if (from < 1 || from > n) {
    fail_validation("InvalidParameter", "from_state out of range", {{"from_state", from}, {"n_states", n}});
  }
  std::vector<char> keep(data.n_subjects(), 0);
  std::size_t count = 0;
  for (const auto& e : data.episodes) {
    if (e.state == from && e.tstart <= s && s < e.tstop) {
      keep[static_cast<std::size_t>(e.subject)] = 1;
      ++count;
    }
  }
  TransitionMatrix m;
  if (count == 0) {
    validate_grid(s, grid);
    m.s = s;
    m.n_states = n;
    m.grid = grid;
    m.est.assign(grid.size(), std::vector<double>(static_cast<std::size_t>(n * n), std::numeric_limits<double>::quiet_NaN()));
    m.add_flag("EmptyLandmarkSet", "no subject occupies state " + std::to_string(from) + " at s");
  } else {
    m = product_integral(nelson_aalen(data, &keep), s, grid);
    // Only row `from` is estimated; the others describe subjects not in the landmark set.
    for (auto& flat : m.est) {
      for (int h = 1; h <= n; ++h) {
        if (h == from) continue;
        for (int j = 0; j < n; ++j) flat[static_cast<std::size_t>((h - 1) * n + j)] = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  m.method = Method::lmaj;
  m.from_states = {from};
  if (count) flag_exhausted(m, data, &keep);
  return m;
}

std::vector<std::pair<int, int>> reported_pairs(const TransitionMatrix& m, const dataio::TransitionSystem& sys) {
  std::vector<std::pair<int, int>> out;
  for (int h : m.from_states) {
    // states reachable from h, h included
    std::vector<char> seen(static_cast<std::size_t>(sys.n_states() + 1), 0);
    std::vector<int> stack{h};
    seen[static_cast<std::size_t>(h)] = 1;
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      for (int y : sys.targets(x)) {
        if (!seen[static_cast<std::size_t>(y)]) {
          seen[static_cast<std::size_t>(y)] = 1;
          stack.push_back(y);
        }
      }
    }
    for (int j = 1; j <= sys.n_states(); ++j) {
      if (seen[static_cast<std::size_t>(j)]) out.emplace_back(h, j);
    }
  }
  return out;
}

}  // namespace msm::msmprob
