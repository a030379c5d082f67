#include <algorithm>
#include <cmath>
#include <set>

#include "msm/dataio.hpp"
#include "msm/error.hpp"

namespace msm::dataio {

const char* to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::text: return "text";
  }
  return "text";
}

Dataset::Dataset(std::vector<Column> columns) : columns_(std::move(columns)) {
  n_rows_ = columns_.empty() ? 0 : columns_.front().raw.size();
}

const Column* Dataset::find(std::string_view name) const {
  for (const auto& c : columns_) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const Column& Dataset::column(std::string_view name) const {
  if (const Column* c = find(name)) return *c;
  fail_validation("MissingColumn", "no column named '" + std::string(name) + "'",
                  {{"column", std::string(name)}});
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  std::vector<Column> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) {
    Column s;
    s.name = c.name;
    s.kind = c.kind;
    s.levels = c.levels;
    s.raw.reserve(rows.size());
    s.missing.reserve(rows.size());
    for (auto r : rows) {
      s.raw.push_back(c.raw[r]);
      s.missing.push_back(c.missing[r]);
      if (!c.numeric.empty()) s.numeric.push_back(c.numeric[r]);
      if (!c.codes.empty()) s.codes.push_back(c.codes[r]);
    }
    out.push_back(std::move(s));
  }
  Dataset d(std::move(out));
  d.n_rows_ = rows.size();
  return d;
}

bool operator==(const Dataset& a, const Dataset& b) {
  if (a.n_rows_ != b.n_rows_ || a.columns_.size() != b.columns_.size()) return false;
  for (std::size_t c = 0; c < a.columns_.size(); ++c) {
    const auto& x = a.columns_[c];
    const auto& y = b.columns_[c];
    if (x.name != y.name || x.kind != y.kind || x.raw != y.raw || x.missing != y.missing ||
        x.codes != y.codes || x.levels != y.levels || x.numeric.size() != y.numeric.size()) {
      return false;
    }
    for (std::size_t i = 0; i < x.numeric.size(); ++i) {
      bool both_nan = std::isnan(x.numeric[i]) && std::isnan(y.numeric[i]);
      if (!both_nan && x.numeric[i] != y.numeric[i]) return false;
    }
  }
  return true;
}

namespace {

const Column& numeric_column(const Dataset& d, const std::string& name) {
  const Column& c = d.column(name);
  if (c.kind != ColumnKind::numeric) {
    fail_validation("NonNumericColumn", "column '" + name + "' is not numeric", {{"column", name}});
  }
  return c;
}

void check_covariates(const Dataset& d, const std::vector<std::string>& covariates) {
  for (const auto& name : covariates) d.column(name);
}

void check_binary(const Column& c, std::size_t row) {
  double v = c.numeric[row];
  if (v != 0.0 && v != 1.0) {
    fail_validation("NonBinaryStatus",
                    "column '" + c.name + "' has value " + c.raw[row] + " at row " + std::to_string(row + 1),
                    {{"column", c.name}, {"row", row + 1}, {"value", c.raw[row]}});
  }
}

void check_nonnegative(const Column& c, std::size_t row) {
  if (c.numeric[row] < 0.0) {
    fail_validation("NegativeTime",
                    "column '" + c.name + "' has negative value at row " + std::to_string(row + 1),
                    {{"column", c.name}, {"row", row + 1}, {"value", c.raw[row]}});
  }
}

template <class Out>
std::vector<std::size_t> complete_rows(const Dataset& d, const std::vector<const Column*>& roles, Out& out) {
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    bool ok = std::none_of(roles.begin(), roles.end(), [&](const Column* c) { return c->is_missing(r); });
    if (ok) keep.push_back(r);
  }
  out.dropped = d.n_rows() - keep.size();
  out.source_rows = keep;
  return keep;
}

template <class T>
std::vector<T> pick(const std::vector<T>& v, std::span<const std::size_t> rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(v[r]);
  return out;
}

std::vector<int> to_int(const std::vector<double>& v, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(static_cast<int>(v[r]));
  return out;
}

}  // namespace

SurvivalData bind_survival(const Dataset& data, const SurvivalMapping& m) {
  const Column& time = numeric_column(data, m.time);
  const Column& status = numeric_column(data, m.status);
  check_covariates(data, m.covariates);
  SurvivalData out;
  auto keep = complete_rows(data, {&time, &status}, out);
  for (auto r : keep) {
    check_nonnegative(time, r);
    check_binary(status, r);
  }
  out.data = data.select_rows(keep);
  out.time = pick(time.numeric, keep);
  out.status = to_int(status.numeric, keep);
  out.covariates = m.covariates;
  return out;
}

SurvivalData SurvivalData::resample(std::span<const std::size_t> rows) const {
  SurvivalData out;
  out.data = data.select_rows(rows);
  out.time = pick(time, rows);
  out.status = pick(status, rows);
  out.covariates = covariates;
  out.source_rows = pick(source_rows, rows);
  return out;
}

IdmData bind_idm(const Dataset& data, const IdmMapping& m) {
  const Column& t1 = numeric_column(data, m.time1);
  const Column& e1 = numeric_column(data, m.event1);
  const Column& st = numeric_column(data, m.stime);
  const Column& ev = numeric_column(data, m.event);
  check_covariates(data, m.covariates);
  IdmData out;
  auto keep = complete_rows(data, {&t1, &e1, &st, &ev}, out);
  std::vector<std::size_t> bad;
  for (auto r : keep) {
    check_nonnegative(t1, r);
    check_nonnegative(st, r);
    check_binary(e1, r);
    check_binary(ev, r);
    bool inconsistent = t1.numeric[r] > st.numeric[r] ||
                        (e1.numeric[r] == 0.0 && t1.numeric[r] != st.numeric[r]);
    if (inconsistent) bad.push_back(r + 1);
  }
  if (!bad.empty()) {
    fail_validation("InconsistentTimes",
                    std::to_string(bad.size()) + " row(s) violate time1 <= stime / event1=0 => time1 = stime",
                    {{"rows", bad}});
  }
  out.data = data.select_rows(keep);
  out.time1 = pick(t1.numeric, keep);
  out.event1 = to_int(e1.numeric, keep);
  out.stime = pick(st.numeric, keep);
  out.event = to_int(ev.numeric, keep);
  out.covariates = m.covariates;
  return out;
}

IdmData IdmData::resample(std::span<const std::size_t> rows) const {
  IdmData out;
  out.data = data.select_rows(rows);
  out.time1 = pick(time1, rows);
  out.event1 = pick(event1, rows);
  out.stime = pick(stime, rows);
  out.event = pick(event, rows);
  out.covariates = covariates;
  out.source_rows = pick(source_rows, rows);
  return out;
}

// ---- transition systems ----

int TransitionSystem::transition(int from, int to) const {
  if (from < 1 || from > n_states_ || to < 1 || to > n_states_) return 0;
  return tmat_[static_cast<std::size_t>((from - 1) * n_states_ + (to - 1))];
}

std::vector<int> TransitionSystem::targets(int from) const {
  std::vector<int> out;
  for (int j = 1; j <= n_states_; ++j) {
    if (transition(from, j)) out.push_back(j);
  }
  return out;
}

bool TransitionSystem::has_incoming(int state) const {
  for (int h = 1; h <= n_states_; ++h) {
    if (transition(h, state)) return true;
  }
  return false;
}

bool TransitionSystem::progressive() const {
  // Kahn's algorithm: acyclic iff every state can be peeled off.
  std::vector<int> indeg(static_cast<std::size_t>(n_states_ + 1), 0);
  for (auto [h, j] : edges_) ++indeg[static_cast<std::size_t>(j)];
  std::vector<int> ready;
  for (int s = 1; s <= n_states_; ++s) {
    if (indeg[static_cast<std::size_t>(s)] == 0) ready.push_back(s);
  }
  int seen = 0;
  while (!ready.empty()) {
    int s = ready.back();
    ready.pop_back();
    ++seen;
    for (int j : targets(s)) {
      if (--indeg[static_cast<std::size_t>(j)] == 0) ready.push_back(j);
    }
  }
  return seen == n_states_;
}

TransitionSystem build_transition_system(int n_states, std::vector<std::string> labels,
                                         const std::vector<std::pair<int, int>>& edges) {
  if (n_states < 2) {
    fail_validation("TooFewStates", "a transition system needs at least 2 states", {{"n_states", n_states}});
  }
  if (labels.empty()) {
    for (int s = 1; s <= n_states; ++s) labels.push_back(std::to_string(s));
  }
  if (static_cast<int>(labels.size()) != n_states) {
    fail_validation("LabelCount", "expected " + std::to_string(n_states) + " state labels",
                    {{"n_states", n_states}, {"labels", labels.size()}});
  }
  std::vector<int> tmat(static_cast<std::size_t>(n_states * n_states), 0);
  for (auto [h, j] : edges) {
    if (h < 1 || h > n_states || j < 1 || j > n_states) {
      fail_validation("EdgeOutOfRange", "edge endpoint outside 1.." + std::to_string(n_states),
                      {{"from", h}, {"to", j}});
    }
    if (h == j) fail_validation("SelfTransition", "self-transition " + std::to_string(h) + "->" + std::to_string(j),
                                {{"from", h}, {"to", j}});
    auto& cell = tmat[static_cast<std::size_t>((h - 1) * n_states + (j - 1))];
    if (cell) fail_validation("DuplicateEdge", "duplicate edge", {{"from", h}, {"to", j}});
    cell = -1;
  }
  TransitionSystem sys;
  sys.n_states_ = n_states;
  sys.labels_ = std::move(labels);
  int k = 0;
  for (int h = 1; h <= n_states; ++h) {
    for (int j = 1; j <= n_states; ++j) {
      auto& cell = tmat[static_cast<std::size_t>((h - 1) * n_states + (j - 1))];
      if (cell) {
        cell = ++k;
        sys.edges_.emplace_back(h, j);
      }
    }
  }
  sys.tmat_ = std::move(tmat);
  return sys;
}

TransitionSystem idm_transition_system(std::vector<std::string> labels) {
  if (labels.empty()) labels = {"healthy", "recurrence/diseased", "death"};
  return build_transition_system(3, std::move(labels), {{1, 2}, {1, 3}, {2, 3}});
}

bool is_idm_shape(const TransitionSystem& s) {
  return s.n_states() == 3 && s.n_transitions() == 3 && s.transition(1, 2) == 1 &&
         s.transition(1, 3) == 2 && s.transition(2, 3) == 3;
}

// ---- general multi-state ----

MsmData bind_msm(const Dataset& data, const MsmMapping& m) {
  const auto& sys = m.system;
  const int n = sys.n_states();
  if (static_cast<int>(m.state_columns.size()) != n - 1) {
    fail_validation("StateColumnCount",
                    "expected one (time, status) pair for each of the " + std::to_string(n - 1) + " non-initial states",
                    {{"expected", n - 1}, {"given", m.state_columns.size()}});
  }
  check_covariates(data, m.covariates);
  std::vector<const Column*> roles;
  for (const auto& sc : m.state_columns) {
    roles.push_back(&numeric_column(data, sc.time));
    roles.push_back(&numeric_column(data, sc.status));
  }
  MsmData out;
  auto keep = complete_rows(data, roles, out);
  out.data = data.select_rows(keep);
  out.system = sys;
  out.times.assign(static_cast<std::size_t>(n + 1), {});
  out.statuses.assign(static_cast<std::size_t>(n + 1), {});
  for (int s = 2; s <= n; ++s) {
    const Column* t = roles[static_cast<std::size_t>(2 * (s - 2))];
    const Column* st = roles[static_cast<std::size_t>(2 * (s - 2) + 1)];
    for (auto r : keep) {
      check_nonnegative(*t, r);
      check_binary(*st, r);
    }
    out.times[static_cast<std::size_t>(s)] = pick(t->numeric, keep);
    out.statuses[static_cast<std::size_t>(s)] = to_int(st->numeric, keep);
  }
  // An observed entry into a state cannot postdate anything downstream of it.
  std::vector<std::vector<char>> reach(static_cast<std::size_t>(n + 1), std::vector<char>(static_cast<std::size_t>(n + 1), 0));
  for (int h = 1; h <= n; ++h) {
    std::vector<int> stack = sys.targets(h);
    while (!stack.empty()) {
      int j = stack.back();
      stack.pop_back();
      if (reach[static_cast<std::size_t>(h)][static_cast<std::size_t>(j)]) continue;
      reach[static_cast<std::size_t>(h)][static_cast<std::size_t>(j)] = 1;
      for (int k : sys.targets(j)) stack.push_back(k);
    }
  }
  std::vector<std::size_t> bad;
  for (std::size_t r = 0; r < keep.size(); ++r) {
    bool ok = true;
    for (int s = 2; s <= n && ok; ++s) {
      if (out.statuses[static_cast<std::size_t>(s)][r] != 1) continue;
      for (int k = 2; k <= n && ok; ++k) {
        if (k != s && reach[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)] &&
            !reach[static_cast<std::size_t>(k)][static_cast<std::size_t>(s)] &&
            out.times[static_cast<std::size_t>(k)][r] < out.times[static_cast<std::size_t>(s)][r]) {
          ok = false;
        }
      }
    }
    if (!ok) bad.push_back(keep[r] + 1);
  }
  if (!bad.empty()) {
    fail_validation("InconsistentTimes",
                    std::to_string(bad.size()) + " row(s) record a state entry after a downstream state's time",
                    {{"rows", bad}});
  }
  if (m.priority.empty()) {
    for (int s = 2; s <= n; ++s) out.priority.push_back(s);
  } else {
    std::set<int> seen(m.priority.begin(), m.priority.end());
    if (seen.size() != m.priority.size() ||
        std::any_of(m.priority.begin(), m.priority.end(), [&](int s) { return s < 2 || s > n; })) {
      fail_validation("InvalidPriority", "tie priority must list distinct non-initial states");
    }
    out.priority = m.priority;
    for (int s = 2; s <= n; ++s) {
      if (!seen.count(s)) out.priority.push_back(s);
    }
  }
  out.covariates = m.covariates;
  return out;
}

MsmData MsmData::resample(std::span<const std::size_t> rows) const {
  MsmData out;
  out.data = data.select_rows(rows);
  out.system = system;
  out.times.resize(times.size());
  out.statuses.resize(statuses.size());
  for (std::size_t s = 2; s < times.size(); ++s) {
    out.times[s] = pick(times[s], rows);
    out.statuses[s] = pick(statuses[s], rows);
  }
  out.priority = priority;
  out.covariates = covariates;
  out.source_rows = pick(source_rows, rows);
  return out;
}

MsmData idm_as_msm(const IdmData& d, const TransitionSystem& system) {
  if (!is_idm_shape(system)) {
    fail_validation("NotIllnessDeath", "illness-death data requires the 3-state illness-death schema");
  }
  MsmData out;
  out.data = d.data;
  out.system = system;
  out.times = {{}, {}, d.time1, d.stime};
  out.statuses = {{}, {}, d.event1, d.event};
  out.priority = {2, 3};
  out.covariates = d.covariates;
  out.source_rows = d.source_rows;
  out.dropped = d.dropped;
  return out;
}

}  // namespace msm::dataio
