#include <algorithm>
#include <cmath>
#include <limits>

#include "msm/dataio.hpp"
#include "msm/error.hpp"

namespace msm::dataio {

namespace {

// Spells of zero length (entry and exit recorded at the same time) are
// stretched by this much so that every long-format row has tstart < tstop.
// Half the smallest gap between distinct observed times, split across the
// longest possible path, so no shifted time can reach another observed time.
double zero_sojourn_step(const MsmData& d) {
  std::vector<double> all{0.0};
  for (std::size_t s = 2; s < d.times.size(); ++s) all.insert(all.end(), d.times[s].begin(), d.times[s].end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < all.size(); ++i) gap = std::min(gap, all[i] - all[i - 1]);
  if (!std::isfinite(gap)) gap = 1.0;
  return gap / (2.0 * (d.system.n_states() + 1));
}

}  // namespace

LongFormatData to_long_format(const MsmData& d) {
  const auto& sys = d.system;
  LongFormatData out;
  out.system = sys;
  out.subjects = d.data;
  const double step = zero_sojourn_step(d);

  std::vector<int> rank(static_cast<std::size_t>(sys.n_states() + 1), 0);
  for (std::size_t i = 0; i < d.priority.size(); ++i) rank[static_cast<std::size_t>(d.priority[i])] = static_cast<int>(i);

  for (std::size_t r = 0; r < d.n(); ++r) {
    const int subject = static_cast<int>(r);
    int state = 1;
    double entry_raw = 0.0;
    double entry = 0.0;
    std::vector<char> visited(static_cast<std::size_t>(sys.n_states() + 1), 0);
    visited[1] = 1;
    while (true) {
      auto targets = sys.targets(state);
      if (targets.empty()) break;
      int next = 0;
      double next_time = 0.0;
      double censor_time = entry_raw;
      for (int j : targets) {
        const double t = d.times[static_cast<std::size_t>(j)][r];
        censor_time = std::max(censor_time, t);
        if (d.statuses[static_cast<std::size_t>(j)][r] != 1 || visited[static_cast<std::size_t>(j)]) continue;
        if (t < entry_raw) {
          fail_validation("PathInconsistent",
                          "row " + std::to_string(r + 1) + ": transition " + std::to_string(state) + "->" +
                              std::to_string(j) + " recorded before entry into state " + std::to_string(state),
                          {{"row", r + 1}, {"from", state}, {"to", j}});
        }
        if (!next || t < next_time ||
            (t == next_time && rank[static_cast<std::size_t>(j)] < rank[static_cast<std::size_t>(next)])) {
          next = j;
          next_time = t;
        }
      }
      const double exit_raw = next ? next_time : censor_time;
      const double exit = exit_raw > entry_raw ? exit_raw : entry + step;
      if (exit_raw <= entry_raw) ++out.zero_sojourn_adjusted;
      for (int j : targets) {
        LongRow row;
        row.subject = subject;
        row.from = state;
        row.to = j;
        row.trans = sys.transition(state, j);
        row.tstart = entry;
        row.tstop = exit;
        row.duration = exit - entry;
        row.status = j == next ? 1 : 0;
        out.rows.push_back(row);
      }
      out.episodes.push_back({subject, state, entry, exit, next});
      if (!next) break;
      state = next;
      visited[static_cast<std::size_t>(state)] = 1;
      entry_raw = exit_raw;
      entry = exit;
    }
  }
  return out;
}

LongFormatData to_long_format(const IdmData& data, const TransitionSystem& system) {
  return to_long_format(idm_as_msm(data, system));
}

CountMatrix count_transitions(const LongFormatData& data) {
  const int n = data.system.n_states();
  CountMatrix m;
  const auto un = static_cast<std::size_t>(n);
  m.counts.assign(un, std::vector<long>(un, 0));
  m.no_event.assign(un, 0);
  m.total.assign(un, 0);
  for (const auto& e : data.episodes) {
    const auto h = static_cast<std::size_t>(e.state - 1);
    if (e.to) {
      ++m.counts[h][static_cast<std::size_t>(e.to - 1)];
      if (data.system.absorbing(e.to)) ++m.no_event[static_cast<std::size_t>(e.to - 1)];
    } else {
      ++m.no_event[h];
    }
  }
  m.proportions.assign(un, std::vector<double>(un + 1, 0.0));
  for (std::size_t h = 0; h < un; ++h) {
    long total = m.no_event[h];
    for (long c : m.counts[h]) total += c;
    m.total[h] = total;
    if (total == 0) continue;
    for (std::size_t j = 0; j < un; ++j) m.proportions[h][j] = static_cast<double>(m.counts[h][j]) / static_cast<double>(total);
    m.proportions[h][un] = static_cast<double>(m.no_event[h]) / static_cast<double>(total);
  }
  return m;
}

}  // namespace msm::dataio
