#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "msm/error.hpp"
#include "msm/regression.hpp"

namespace msm::regression {

void Design::append_column(std::string name, std::span<const double> values) {
  x.insert(x.end(), values.begin(), values.end());
  names.push_back(std::move(name));
}

Design build_design(const dataio::Dataset& data, const std::vector<std::string>& covariates,
                    std::span<const std::size_t> rows) {
  std::vector<std::size_t> candidates(rows.begin(), rows.end());
  if (candidates.empty()) {
    candidates.resize(data.n_rows());
    std::iota(candidates.begin(), candidates.end(), 0);
  }
  std::vector<const dataio::Column*> cols;
  for (const auto& name : covariates) {
    const auto& c = data.column(name);
    if (c.kind == dataio::ColumnKind::text) {
      fail_validation("UnusableCovariate", "column '" + name + "' is free text", {{"column", name}});
    }
    if (std::find(cols.begin(), cols.end(), &c) != cols.end()) {
      fail_validation("DuplicateCovariate", "covariate '" + name + "' listed twice", {{"column", name}});
    }
    cols.push_back(&c);
  }
  Design d;
  for (auto r : candidates) {
    if (std::none_of(cols.begin(), cols.end(), [&](const dataio::Column* c) { return c->is_missing(r); })) {
      d.rows.push_back(r);
    }
  }
  d.n = d.rows.size();
  std::vector<double> buf(d.n);
  for (const auto* c : cols) {
    Term term;
    term.name = c->name;
    if (c->kind == dataio::ColumnKind::numeric) {
      for (std::size_t i = 0; i < d.n; ++i) buf[i] = c->numeric[d.rows[i]];
      term.columns.push_back(d.p());
      d.append_column(c->name, buf);
    } else {
      term.categorical = true;
      term.levels = c->levels;
      for (std::size_t level = 1; level < c->levels.size(); ++level) {
        for (std::size_t i = 0; i < d.n; ++i) {
          buf[i] = c->codes[d.rows[i]] == static_cast<int>(level) ? 1.0 : 0.0;
        }
        term.columns.push_back(d.p());
        d.append_column(c->name + "=" + c->levels[level], buf);
      }
    }
    d.terms.push_back(std::move(term));
  }
  return d;
}

Eigen::VectorXd encode_profile(const Design& design, const std::map<std::string, std::string>& profile) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(design.p()));
  for (const auto& term : design.terms) {
    auto it = profile.find(term.name);
    if (it == profile.end()) {
      fail_validation("MissingProfileValue", "profile has no value for covariate '" + term.name + "'",
                      {{"covariate", term.name}});
    }
    const std::string& value = it->second;
    if (term.categorical) {
      auto lv = std::find(term.levels.begin(), term.levels.end(), value);
      if (lv == term.levels.end()) {
        fail_validation("UnknownLevel", "'" + value + "' is not a level of '" + term.name + "'",
                        {{"covariate", term.name}, {"value", value}});
      }
      const auto level = static_cast<std::size_t>(lv - term.levels.begin());
      if (level > 0) x[static_cast<Eigen::Index>(term.columns[level - 1])] = 1.0;
    } else {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || ptr != value.data() + value.size()) {
        fail_validation("InvalidProfileValue", "covariate '" + term.name + "' needs a numeric value",
                        {{"covariate", term.name}, {"value", value}});
      }
      x[static_cast<Eigen::Index>(term.columns.front())] = v;
    }
  }
  return x;
}

}  // namespace msm::regression
