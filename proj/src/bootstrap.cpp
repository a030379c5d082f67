#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "msm/error.hpp"
#include "msm/msmprob.hpp"
#include "msm/stats.hpp"

namespace msm::msmprob {

std::size_t Sample::n() const { return idm ? idm->n() : msm ? msm->n() : 0; }

const dataio::Dataset& Sample::dataset() const { return idm ? idm->data : msm->data; }

Sample Sample::resample(std::span<const std::size_t> rows) const {
  Sample out;
  out.system = system;
  if (idm) out.idm = idm->resample(rows);
  if (msm) out.msm = msm->resample(rows);
  return out;
}

dataio::LongFormatData Sample::long_format() const {
  if (idm) return dataio::to_long_format(*idm, system);
  return dataio::to_long_format(*msm);
}

const dataio::IdmData& Sample::require_idm(const char* what) const {
  if (!idm) {
    fail_validation("RequiresIdm", std::string(what) + " is defined for illness-death data only");
  }
  return *idm;
}

Sample make_sample(const dataio::IdmData& idm, const dataio::TransitionSystem& system) {
  Sample s;
  s.system = system;
  s.idm = idm;
  return s;
}

Sample make_sample(const dataio::MsmData& msm) {
  Sample s;
  s.system = msm.system;
  s.msm = msm;
  return s;
}

std::vector<std::size_t> resample_indices(std::size_t n, std::uint64_t seed, std::uint64_t replicate) {
  std::mt19937_64 rng(stats::substream_seed(seed, replicate));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = pick(rng);
  return rows;
}

BootstrapResult bootstrap(const Sample& sample, const std::function<std::vector<double>(const Sample&)>& estimator,
                          const BootstrapOptions& opt) {
  if (opt.n_boot < 2) fail_validation("InvalidParameter", "n_boot must be at least 2", {{"n_boot", opt.n_boot}});
  if (!(opt.conf_level > 0.0 && opt.conf_level < 1.0)) {
    fail_validation("InvalidParameter", "conf_level must lie in (0, 1)", {{"conf_level", opt.conf_level}});
  }
  const auto B = static_cast<std::size_t>(opt.n_boot);
  std::vector<std::vector<double>> reps(B);
  std::vector<char> ok(B, 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t b = next++; b < B; b = next++) {
      try {
        const auto rows = resample_indices(sample.n(), opt.seed, b);
        reps[b] = estimator(sample.resample(rows));
        ok[b] = 1;
      } catch (const Error&) {
        ok[b] = 0;
      }
    }
  };
  std::size_t threads = opt.threads > 0 ? static_cast<std::size_t>(opt.threads) : std::thread::hardware_concurrency();
  threads = std::clamp<std::size_t>(threads, 1, B);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  BootstrapResult res;
  for (std::size_t b = 0; b < B; ++b) {
    if (ok[b]) {
      res.replicates.push_back(std::move(reps[b]));
    } else {
      ++res.n_failed;
    }
  }
  if (res.n_failed * 5 > opt.n_boot) {
    fail_computation("BootstrapFailed", "more than 20% of bootstrap replicates failed",
                     {{"failed", res.n_failed}, {"n_boot", opt.n_boot}});
  }
  const std::size_t width = res.replicates.empty() ? 0 : res.replicates.front().size();
  res.lower.assign(width, std::numeric_limits<double>::quiet_NaN());
  res.upper.assign(width, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> column;
  for (std::size_t k = 0; k < width; ++k) {
    column.clear();
    for (const auto& r : res.replicates) {
      if (k < r.size() && std::isfinite(r[k])) column.push_back(r[k]);
    }
    if (column.empty()) continue;
    const auto iv = stats::percentile_interval(column, opt.conf_level);
    res.lower[k] = iv.lower;
    res.upper[k] = iv.upper;
  }
  return res;
}

namespace {

std::vector<double> flatten(const TransitionMatrix& m) {
  std::vector<double> out;
  for (const auto& e : m.est) out.insert(out.end(), e.begin(), e.end());
  return out;
}

// LMAJ for every transient state, one landmark set per starting state.
TransitionMatrix landmark_aalen_johansen_all(const dataio::LongFormatData& data, double s, const std::vector<double>& grid) {
  TransitionMatrix out;
  const int n = data.system.n_states();
  bool first = true;
  for (int h = 1; h <= n; ++h) {
    if (data.system.absorbing(h)) continue;
    auto m = landmark_aalen_johansen(data, s, h, grid);
    if (first) {
      out = m;
      out.from_states.clear();
      first = false;
    } else {
      for (std::size_t g = 0; g < grid.size(); ++g) {
        for (int j = 0; j < n; ++j) {
          const auto cell = static_cast<std::size_t>((h - 1) * n + j);
          out.est[g][cell] = m.est[g][cell];
        }
      }
      for (const auto& f : m.flags) out.add_flag(f.code, f.message);
    }
    out.from_states.push_back(h);
  }
  return out;
}

}  // namespace

TransitionMatrix estimate(const Sample& sample, const TransProbRequest& req) {
  const auto data = sample.long_format();
  const auto grid = req.grid.empty() ? default_grid(data, req.s) : req.grid;
  TransitionMatrix m;
  switch (req.method) {
    case Method::aj: m = aalen_johansen(data, req.s, grid); break;
    case Method::lm: m = landmark_idm(sample.require_idm("the landmark estimator"), req.s, grid); break;
    case Method::plm:
      m = presmoothed_landmark_idm(sample.require_idm("the presmoothed landmark estimator"), req.s, grid);
      break;
    case Method::lmaj:
      m = req.from_state ? landmark_aalen_johansen(data, req.s, *req.from_state, grid)
                         : landmark_aalen_johansen_all(data, req.s, grid);
      break;
    case Method::ipcw: m = ipcw_conditional(sample.require_idm("the IPCW estimator"), req.s, grid, req.kernel); break;
    case Method::breslow:
      m = breslow_conditional(data, req.s, grid, req.covariates, req.profile, req.ties);
      break;
  }
  if (req.from_state && req.method != Method::lmaj) {
    const int h = *req.from_state;
    if (std::find(m.from_states.begin(), m.from_states.end(), h) == m.from_states.end()) {
      fail_validation("InvalidParameter", std::string(to_string(req.method)) + " does not estimate transitions from state " +
                                              std::to_string(h),
                      {{"from_state", h}});
    }
    m.from_states = {h};
  }
  return m;
}

TransitionMatrix transition_probabilities(const Sample& sample, const TransProbRequest& req) {
  auto m = estimate(sample, req);
  if (req.n_boot <= 0) return m;
  TransProbRequest inner = req;
  inner.grid = m.grid;
  inner.n_boot = 0;
  const auto boot = bootstrap(
      sample,
      [&](const Sample& s) { return flatten(estimate(s, inner)); },
      {req.n_boot, req.conf_level, req.seed, 0});
  const auto cells = static_cast<std::size_t>(m.n_states * m.n_states);
  m.lower.assign(m.grid.size(), std::vector<double>(cells));
  m.upper.assign(m.grid.size(), std::vector<double>(cells));
  for (std::size_t g = 0; g < m.grid.size(); ++g) {
    for (std::size_t c = 0; c < cells; ++c) {
      m.lower[g][c] = boot.lower.empty() ? std::numeric_limits<double>::quiet_NaN() : boot.lower[g * cells + c];
      m.upper[g][c] = boot.upper.empty() ? std::numeric_limits<double>::quiet_NaN() : boot.upper[g * cells + c];
    }
  }
  m.n_boot = req.n_boot;
  if (boot.n_failed > 0) {
    m.add_flag("BootstrapFailures", std::to_string(boot.n_failed) + " bootstrap replicates failed and were dropped");
  }
  return m;
}

}  // namespace msm::msmprob
