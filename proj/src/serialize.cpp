#include "msm/serialize.hpp"

#include <cmath>

namespace msm::serialize {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

namespace {

json test_stat(const regression::TestStat& t) {
  return {{"statistic", number(t.statistic)}, {"df", t.df}, {"p_value", number(t.p)}};
}

json vec(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

}  // namespace

json to_json(const survcore::SurvCurve& c) {
  json points = json::array();
  for (const auto& p : c.points) {
    points.push_back({{"time", p.time},
                      {"n_risk", p.n_risk},
                      {"n_event", p.n_event},
                      {"surv", number(p.surv)},
                      {"se", number(p.se)},
                      {"lower", number(p.lower)},
                      {"upper", number(p.upper)}});
  }
  json out = {{"group", c.group ? json(*c.group) : json(nullptr)}, {"n", c.n}, {"points", points}};
  if (c.no_events) out["flags"] = json::array({{{"code", "NoEvents"}, {"message", "no events in this group"}}});
  return out;
}

json to_json(const survcore::RankTestResult& r) {
  json groups = json::array();
  for (const auto& g : r.groups) {
    groups.push_back({{"label", g.label}, {"n", g.n}, {"observed", number(g.observed)}, {"expected", number(g.expected)}});
  }
  return {{"groups", groups},
          {"chi_squared", number(r.chi_squared)},
          {"df", r.df},
          {"p_value", number(r.p_value)},
          {"rho", r.rho}};
}

json to_json(const regression::CoxFit& f) {
  json coefs = json::array();
  for (std::size_t k = 0; k < f.names.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    coefs.push_back({{"name", f.names[k]},
                     {"coef", number(f.coef[i])},
                     {"hr", number(f.hr[i])},
                     {"se", number(f.se[i])},
                     {"z", number(f.z[i])},
                     {"p_value", number(f.p[i])},
                     {"infinite", f.infinite_coef[k] != 0}});
  }
  return {{"coefficients", coefs},
          {"loglik", {number(f.loglik_null), number(f.loglik_final)}},
          {"tests", {{"likelihood_ratio", test_stat(f.lr)}, {"wald", test_stat(f.wald)}, {"score", test_stat(f.score)}}},
          {"ties", regression::to_string(f.ties)},
          {"n", f.n},
          {"n_events", f.n_events},
          {"converged", f.converged},
          {"iterations", f.iterations}};
}

json to_json(const regression::PhTestResult& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"term", row.term}, {"chi_squared", number(row.chi_squared)}, {"df", row.df}, {"p_value", number(row.p)}});
  }
  return {{"transform", regression::to_string(r.transform)}, {"rows", rows}};
}

json to_json(const regression::AnovaTable& t) {
  json rows = json::array();
  for (const auto& row : t.rows) {
    rows.push_back({{"term", row.term},
                    {"loglik", number(row.loglik)},
                    {"chi_squared", number(row.chi_squared)},
                    {"df", row.df},
                    {"p_value", number(row.p)}});
  }
  return {{"loglik_null", number(t.loglik_null)}, {"n", t.n}, {"rows", rows}};
}

json to_json(const regression::NonlinearityResult& r) {
  return {{"covariate", r.covariate},
          {"loglik_linear", number(r.loglik_linear)},
          {"loglik_spline", number(r.loglik_spline)},
          {"chi_squared", number(r.chi_squared)},
          {"df", r.df},
          {"p_value", number(r.p)},
          {"knots", vec(r.knots)}};
}

json to_json(const regression::AftFit& f) {
  json coefs = json::array();
  for (std::size_t k = 0; k < f.names.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    coefs.push_back({{"name", f.names[k]},
                     {"coef", number(f.coef[i])},
                     {"se", number(f.se[i])},
                     {"z", number(f.z[i])},
                     {"p_value", number(f.p[i])}});
  }
  return {{"distribution", regression::to_string(f.distribution)},
          {"coefficients", coefs},
          {"scale", number(f.scale)},
          {"log_scale", number(f.log_scale)},
          {"log_scale_se", number(f.log_scale_se)},
          {"loglik", number(f.loglik)},
          {"n_params", f.n_params},
          {"aic", number(f.aic)},
          {"n", f.n},
          {"n_events", f.n_events},
          {"converged", f.converged},
          {"iterations", f.iterations}};
}

std::string transition_label(const dataio::TransitionSystem& system, int from, int to) {
  return std::to_string(system.display(from)) + std::to_string(system.display(to));
}

json to_json(const dataio::CountMatrix& m, const dataio::TransitionSystem& system) {
  json states = json::array();
  for (int h = 1; h <= system.n_states(); ++h) {
    states.push_back({{"state", h}, {"display", system.display(h)}, {"label", system.label(h)}});
  }
  return {{"states", states},
          {"counts", m.counts},
          {"no_event", m.no_event},
          {"total", m.total},
          {"proportions", m.proportions}};
}

json to_json(const msmprob::Flag& f) { return {{"code", f.code}, {"message", f.message}}; }

json to_json(const std::vector<msmprob::Flag>& flags) {
  json out = json::array();
  for (const auto& f : flags) out.push_back(to_json(f));
  return out;
}

json to_json(const msmprob::TransitionFit& f) {
  json out = {{"transition", f.transition}, {"from", f.from}, {"to", f.to}, {"n_rows", f.n_rows}, {"n_events", f.n_events}};
  out["fit"] = f.fit ? to_json(*f.fit) : json(nullptr);
  out["ph_test"] = f.ph ? to_json(*f.ph) : json(nullptr);
  out["error"] = f.error ? to_json(*f.error) : json(nullptr);
  return out;
}

json to_json(const msmprob::TransitionMatrix& m, const dataio::TransitionSystem& system) {
  const bool with_ci = !m.lower.empty();
  json curves = json::array();
  for (const auto& [h, j] : msmprob::reported_pairs(m, system)) {
    const auto cell = static_cast<std::size_t>((h - 1) * m.n_states + (j - 1));
    json grid = json::array();
    for (std::size_t g = 0; g < m.grid.size(); ++g) {
      grid.push_back({{"t", m.grid[g]},
                      {"est", number(m.est[g][cell])},
                      {"lower", with_ci ? number(m.lower[g][cell]) : json(nullptr)},
                      {"upper", with_ci ? number(m.upper[g][cell]) : json(nullptr)}});
    }
    curves.push_back({{"method", msmprob::to_string(m.method)},
                      {"s", m.s},
                      {"from", h},
                      {"to", j},
                      {"label", transition_label(system, h, j)},
                      {"grid", grid},
                      {"n_boot", m.n_boot},
                      {"flags", to_json(m.flags)}});
  }
  return {{"method", msmprob::to_string(m.method)},
          {"s", m.s},
          {"grid", vec(m.grid)},
          {"from_states", m.from_states},
          {"curves", curves},
          {"n_boot", m.n_boot},
          {"flags", to_json(m.flags)}};
}

json to_json(const msmprob::CifResult& r) {
  const bool with_ci = !r.lower.empty();
  json grid = json::array();
  for (std::size_t g = 0; g < r.grid.size(); ++g) {
    grid.push_back({{"t", r.grid[g]},
                    {"est", number(r.illness[g])},
                    {"lower", with_ci ? number(r.lower[g]) : json(nullptr)},
                    {"upper", with_ci ? number(r.upper[g]) : json(nullptr)},
                    {"direct_death", number(r.direct_death[g])},
                    {"initial", number(r.initial[g])}});
  }
  json cond = nullptr;
  if (r.condition) {
    cond = {{"covariate", r.condition->covariate}};
    if (r.condition->level) cond["level"] = *r.condition->level;
    if (r.condition->value) cond["value"] = *r.condition->value;
    if (r.condition->bandwidth) cond["bandwidth"] = *r.condition->bandwidth;
  }
  return {{"grid", grid}, {"n_boot", r.n_boot}, {"conditioning", cond}, {"flags", to_json(r.flags)}};
}

json to_json(const markovcheck::LocalTestResult& r) {
  json out = {{"method", r.method},
              {"s", r.s},
              {"transition", {{"from", r.from}, {"to", r.to}}},
              {"statistic", number(r.statistic)},
              {"p_value", number(r.p_value)},
              {"flags", to_json(r.flags)}};
  if (r.method == "auc") {
    out["sd"] = number(r.sd);
    out["n_boot"] = r.n_boot;
    out["n_failed"] = r.n_failed;
    out["comparator"] = r.comparator;
  } else {
    out["df"] = r.df;
    out["split"] = number(r.split);
    out["groups"] = to_json(survcore::RankTestResult{r.groups, r.statistic, r.df, r.p_value, 0.0})["groups"];
  }
  return out;
}

json to_json(const markovcheck::GlobalCoxResult& r) {
  return {{"method", "cox"},
          {"transition", {{"from", r.from}, {"to", r.to}}},
          {"clock", msmprob::to_string(r.clock)},
          {"covariate", "entry_time"},
          {"coef", number(r.coef)},
          {"hr", number(r.hr)},
          {"se", number(r.se)},
          {"z", number(r.z)},
          {"p_value", number(r.p_value)},
          {"n_rows", r.n_rows},
          {"n_events", r.n_events},
          {"fit", to_json(r.fit)}};
}

json to_json(const markovcheck::GlobalAucResult& r) {
  json local = json::array();
  for (const auto& l : r.local) local.push_back(to_json(l));
  json stats = json::array();
  for (const auto& l : r.local) stats.push_back(number(l.statistic));
  return {{"method", "auc"},
          {"transition", {{"from", r.from}, {"to", r.to}}},
          {"percentiles", vec(r.percentiles)},
          {"s_values", vec(r.s_values)},
          {"p_values", vec(r.p_values)},
          {"statistics", stats},
          {"proportion_rejections", r.proportion_rejections},
          {"alpha", r.alpha},
          {"dropped", r.dropped},
          {"n_boot", r.n_boot},
          {"seed", r.seed},
          {"local", local},
          {"flags", to_json(r.flags)}};
}

json to_json(const markovcheck::GlobalLogrankResult& r) {
  return {{"method", "logrank"},
          {"transition", {{"from", r.from}, {"to", r.to}}},
          {"percentiles", vec(r.percentiles)},
          {"s_values", vec(r.s_values)},
          {"statistics", vec(r.statistics)},
          {"statistic", number(r.statistic)},
          {"p_value", number(r.p_value)},
          {"dropped", r.dropped},
          {"n_perm", r.n_perm},
          {"seed", r.seed},
          {"flags", to_json(r.flags)}};
}

}  // namespace msm::serialize
