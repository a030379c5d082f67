#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace msm::dataio {

enum class ColumnKind { numeric, categorical, text };

const char* to_string(ColumnKind kind);

// One column of a parsed table. `raw` keeps the cell text verbatim (missing
// cells are stored as ""), `numeric` is populated for numeric columns and
// `codes`/`levels` for categorical ones. Missing numeric values are NaN and
// missing categorical codes are -1.
struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::text;
  std::vector<std::string> raw;
  std::vector<char> missing;
  std::vector<double> numeric;
  std::vector<int> codes;
  std::vector<std::string> levels;

  bool is_missing(std::size_t row) const { return missing[row] != 0; }
  std::size_t size() const { return raw.size(); }
};

class Dataset {
public:
  Dataset() = default;
  explicit Dataset(std::vector<Column> columns);

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return columns_.size(); }
  const std::vector<Column>& columns() const { return columns_; }

  const Column* find(std::string_view name) const;
  // Throws MissingColumn.
  const Column& column(std::string_view name) const;

  // Rows in the given order (duplicates allowed). Categorical level sets are
  // preserved so codes stay comparable with the parent table.
  Dataset select_rows(std::span<const std::size_t> rows) const;

  friend bool operator==(const Dataset&, const Dataset&);

private:
  std::vector<Column> columns_;
  std::size_t n_rows_ = 0;
};

bool is_missing_token(std::string_view cell);

Dataset parse_csv(std::string_view bytes, std::optional<char> delimiter_hint = std::nullopt);
Dataset read_csv_file(const std::string& path);
std::string to_csv(const Dataset& data, char delimiter = ',');

// ---- mappings and validated data ----

struct SurvivalMapping {
  std::string time;
  std::string status;
  std::vector<std::string> covariates;
};

struct SurvivalData {
  Dataset data;  // retained rows, all columns
  std::vector<double> time;
  std::vector<int> status;
  std::vector<std::string> covariates;
  std::vector<std::size_t> source_rows;
  std::size_t dropped = 0;

  std::size_t n() const { return time.size(); }
  SurvivalData resample(std::span<const std::size_t> rows) const;
};

SurvivalData bind_survival(const Dataset& data, const SurvivalMapping& mapping);

struct IdmMapping {
  std::string time1;
  std::string event1;
  std::string stime;
  std::string event;
  std::vector<std::string> covariates;
};

struct IdmData {
  Dataset data;
  std::vector<double> time1;
  std::vector<int> event1;
  std::vector<double> stime;
  std::vector<int> event;
  std::vector<std::string> covariates;
  std::vector<std::size_t> source_rows;
  std::size_t dropped = 0;

  std::size_t n() const { return time1.size(); }
  IdmData resample(std::span<const std::size_t> rows) const;
};

IdmData bind_idm(const Dataset& data, const IdmMapping& mapping);

// States are 1-based. tmat(h, j) is 0 when h->j is absent, otherwise the
// transition number in 1..K, assigned row-major.
class TransitionSystem {
public:
  TransitionSystem() = default;

  int n_states() const { return n_states_; }
  int n_transitions() const { return static_cast<int>(edges_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(int state) const { return labels_.at(static_cast<std::size_t>(state - 1)); }

  int transition(int from, int to) const;
  std::pair<int, int> endpoints(int transition) const { return edges_.at(static_cast<std::size_t>(transition - 1)); }
  std::vector<int> targets(int from) const;
  bool absorbing(int state) const { return targets(state).empty(); }
  bool has_incoming(int state) const;
  // No reversible cycles: every path visits each state at most once.
  bool progressive() const;

  int display_offset() const { return display_offset_; }
  void set_display_offset(int offset) { display_offset_ = offset; }
  int display(int state) const { return state - 1 + display_offset_; }

  friend TransitionSystem build_transition_system(int, std::vector<std::string>,
                                                  const std::vector<std::pair<int, int>>&);

private:
  int n_states_ = 0;
  std::vector<std::string> labels_;
  std::vector<int> tmat_;
  std::vector<std::pair<int, int>> edges_;
  int display_offset_ = 1;
};

TransitionSystem build_transition_system(int n_states, std::vector<std::string> labels,
                                         const std::vector<std::pair<int, int>>& edges);
TransitionSystem idm_transition_system(std::vector<std::string> labels = {});
bool is_idm_shape(const TransitionSystem& system);

struct StateColumns {
  std::string time;
  std::string status;
};

struct MsmMapping {
  TransitionSystem system;
  // One entry per non-initial state, in state order 2..n.
  std::vector<StateColumns> state_columns;
  std::vector<std::string> covariates;
  // Tie priority among states reached at the same recorded time; earlier
  // entries win. Empty means declaration order.
  std::vector<int> priority;
};

struct MsmData {
  Dataset data;
  TransitionSystem system;
  // times[state][row], statuses[state][row]; index 0 and 1 unused.
  std::vector<std::vector<double>> times;
  std::vector<std::vector<int>> statuses;
  std::vector<int> priority;
  std::vector<std::string> covariates;
  std::vector<std::size_t> source_rows;
  std::size_t dropped = 0;

  std::size_t n() const { return data.n_rows(); }
  MsmData resample(std::span<const std::size_t> rows) const;
};

MsmData bind_msm(const Dataset& data, const MsmMapping& mapping);

// Wide IDM records viewed as a three-state system.
MsmData idm_as_msm(const IdmData& data, const TransitionSystem& system);

// ---- long format ----

struct LongRow {
  int subject = 0;
  int from = 0;
  int to = 0;
  int trans = 0;
  double tstart = 0.0;
  double tstop = 0.0;
  double duration = 0.0;
  int status = 0;
};

// One occupancy spell. `to` is the state entered at tstop, 0 when censored.
struct Episode {
  int subject = 0;
  int state = 0;
  double tstart = 0.0;
  double tstop = 0.0;
  int to = 0;
};

struct LongFormatData {
  TransitionSystem system;
  Dataset subjects;  // one row per subject, indexed by LongRow::subject
  std::vector<LongRow> rows;
  std::vector<Episode> episodes;
  std::size_t zero_sojourn_adjusted = 0;

  std::size_t n_subjects() const { return subjects.n_rows(); }
};

LongFormatData to_long_format(const MsmData& data);
LongFormatData to_long_format(const IdmData& data, const TransitionSystem& system);

struct CountMatrix {
  // counts[h-1][j-1]; no_event[h-1] counts spells ending censored in h, or
  // arrivals for absorbing states.
  std::vector<std::vector<long>> counts;
  std::vector<long> no_event;
  std::vector<long> total;
  std::vector<std::vector<double>> proportions;  // row-normalised incl. no_event as last column
};

CountMatrix count_transitions(const LongFormatData& data);

}  // namespace msm::dataio
