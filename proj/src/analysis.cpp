#include "msm/analysis.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "msm/error.hpp"
#include "msm/markovcheck.hpp"
#include "msm/regression.hpp"
#include "msm/serialize.hpp"
#include "msm/stats.hpp"
#include "msm/survcore.hpp"

namespace msm::analysis {

namespace {

using serialize::to_json;

// Reads typed values out of a JSON object, records what was used (with
// defaults filled in) and rejects unknown keys.
class Params {
public:
  explicit Params(const json& in, const char* what = "params") : what_(what) {
    if (in.is_null()) {
      in_ = json::object();
    } else if (in.is_object()) {
      in_ = in;
    } else {
      fail_validation("InvalidParameter", std::string(what) + " must be a JSON object");
    }
  }

  bool has(const std::string& key) const { return in_.contains(key) && !in_.at(key).is_null(); }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    T v = has(key) ? convert<T>(key) : std::move(fallback);
    echo_[key] = v;
    return v;
  }

  template <class T>
  std::optional<T> optional(const std::string& key) {
    used_.insert(key);
    if (!has(key)) {
      echo_[key] = nullptr;
      return std::nullopt;
    }
    T v = convert<T>(key);
    echo_[key] = v;
    return v;
  }

  template <class T>
  T require(const std::string& key) {
    used_.insert(key);
    if (!has(key)) fail_validation("MissingParameter", std::string(what_) + " needs '" + key + "'", {{"parameter", key}});
    T v = convert<T>(key);
    echo_[key] = v;
    return v;
  }

  // A value given either as a string or a number, kept as text.
  std::optional<std::string> optional_text(const std::string& key) {
    used_.insert(key);
    if (!has(key)) {
      echo_[key] = nullptr;
      return std::nullopt;
    }
    const auto& v = in_.at(key);
    echo_[key] = v;
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) return v.dump();
    fail_validation("InvalidParameter", "parameter '" + key + "' must be a string or number", {{"parameter", key}});
  }

  // Transition as [from, to] or {from, to}.
  std::pair<int, int> transition(const std::string& key) {
    used_.insert(key);
    if (!has(key)) fail_validation("MissingParameter", std::string(what_) + " needs '" + key + "'", {{"parameter", key}});
    const auto& v = in_.at(key);
    std::pair<int, int> t{0, 0};
    try {
      if (v.is_array() && v.size() == 2) {
        t = {v[0].get<int>(), v[1].get<int>()};
      } else if (v.is_object()) {
        t = {v.at("from").get<int>(), v.at("to").get<int>()};
      } else {
        throw std::invalid_argument("shape");
      }
    } catch (const std::exception&) {
      fail_validation("InvalidParameter", "'" + key + "' must be [from, to]", {{"parameter", key}});
    }
    echo_[key] = {t.first, t.second};
    return t;
  }

  std::map<std::string, std::string> profile(const std::string& key) {
    used_.insert(key);
    std::map<std::string, std::string> out;
    if (!has(key)) {
      echo_[key] = json::object();
      return out;
    }
    const auto& v = in_.at(key);
    if (!v.is_object()) fail_validation("InvalidParameter", "'" + key + "' must be an object", {{"parameter", key}});
    for (const auto& [name, value] : v.items()) {
      if (value.is_string()) {
        out[name] = value.get<std::string>();
      } else if (value.is_number()) {
        out[name] = value.dump();
      } else {
        fail_validation("InvalidParameter", "profile values must be strings or numbers", {{"covariate", name}});
      }
    }
    echo_[key] = v;
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : in_.items()) {
      if (!used_.count(key)) {
        fail_validation("UnknownParameter", "unknown " + std::string(what_) + " key '" + key + "'", {{"parameter", key}});
      }
    }
  }

  const json& echo() const { return echo_; }
  void set_echo(const std::string& key, json value) { echo_[key] = std::move(value); }

private:
  template <class T>
  T convert(const std::string& key) const {
    try {
      return in_.at(key).get<T>();
    } catch (const json::exception&) {
      fail_validation("InvalidParameter", "parameter '" + key + "' has the wrong type", {{"parameter", key}});
    }
  }

  json in_;
  json echo_ = json::object();
  std::set<std::string> used_;
  const char* what_;
};

using Strings = std::vector<std::string>;
using Doubles = std::vector<double>;

void require_kind(const Bound& b, std::initializer_list<MappingKind> kinds, const std::string& name) {
  if (std::find(kinds.begin(), kinds.end(), b.kind) != kinds.end()) return;
  json allowed = json::array();
  for (auto k : kinds) allowed.push_back(to_string(k));
  fail_validation("IncompatibleMapping", "'" + name + "' needs a " + std::string(to_string(*kinds.begin())) + " mapping",
                  {{"bound", to_string(b.kind)}, {"allowed", allowed}});
}

regression::SurvivalFrame frame_of(const dataio::SurvivalData& d) {
  regression::SurvivalFrame f;
  f.start.assign(d.n(), 0.0);
  f.stop = d.time;
  f.status = d.status;
  f.data = &d.data;
  return f;
}

std::uint64_t seed_of(Params& p, std::uint64_t fallback) { return p.get<std::uint64_t>("seed", fallback); }

int positive_int(Params& p, const std::string& key, int fallback, int minimum) {
  const int v = p.get<int>(key, fallback);
  if (v < minimum) fail_validation("InvalidParameter", "'" + key + "' must be at least " + std::to_string(minimum), {{key, v}});
  return v;
}

double conf_level(Params& p) {
  const double c = p.get<double>("conf_level", 0.95);
  if (!(c > 0.0 && c < 1.0)) fail_validation("InvalidParameter", "conf_level must lie in (0, 1)", {{"conf_level", c}});
  return c;
}

std::vector<double> sorted_grid(std::vector<double> grid) {
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

// ---- survival analyses ----

json run_km(const Bound& b, Params& p) {
  survcore::KmOptions opt;
  opt.group_by = p.optional<std::string>("group_by");
  opt.conf_level = conf_level(p);
  opt.conf_type = survcore::parse_conf_type(p.get<std::string>("conf_type", "log"));
  p.finish();
  json curves = json::array();
  for (const auto& c : survcore::kaplan_meier(*b.survival, opt)) curves.push_back(to_json(c));
  return {{"curves", curves}};
}

json run_ranktest(const Bound& b, Params& p) {
  const auto group = p.require<std::string>("group_by");
  const double rho = p.get<double>("rho", 0.0);
  p.finish();
  return to_json(survcore::rank_test(*b.survival, group, rho));
}

json run_cox(const Bound& b, Params& p) {
  const auto covs = p.get<Strings>("covariates", b.survival->covariates);
  const auto ties = regression::parse_ties(p.get<std::string>("ties", "efron"));
  p.finish();
  const auto cd = regression::make_cox_data(frame_of(*b.survival), covs);
  return to_json(regression::fit_cox(cd, {ties}));
}

json run_phtest(const Bound& b, Params& p) {
  const auto covs = p.get<Strings>("covariates", b.survival->covariates);
  const auto ties = regression::parse_ties(p.get<std::string>("ties", "efron"));
  const auto transform = regression::parse_time_transform(p.get<std::string>("transform", "km"));
  p.finish();
  if (covs.empty()) fail_validation("NoTerms", "the proportional hazards test needs at least one covariate");
  const auto cd = regression::make_cox_data(frame_of(*b.survival), covs);
  const auto fit = regression::fit_cox(cd, {ties});
  json out = to_json(regression::ph_test(cd, fit, transform));
  out["fit"] = to_json(fit);
  return out;
}

json run_anova(const Bound& b, Params& p) {
  const auto covs = p.get<Strings>("covariates", b.survival->covariates);
  const auto ties = regression::parse_ties(p.get<std::string>("ties", "efron"));
  const auto nonlinear = p.get<Strings>("nonlinear", {});
  p.finish();
  const auto frame = frame_of(*b.survival);
  json out = to_json(regression::anova_sequential(frame, covs, ties));
  json nl = json::array();
  for (const auto& c : nonlinear) nl.push_back(to_json(regression::nonlinearity_test(frame, c, covs, ties)));
  out["nonlinearity"] = nl;
  return out;
}

json run_aft(const Bound& b, Params& p) {
  const auto covs = p.get<Strings>("covariates", b.survival->covariates);
  const auto dists =
      p.get<Strings>("distributions", {"exponential", "weibull", "gaussian", "logistic", "lognormal", "loglogistic"});
  p.finish();
  const auto& d = *b.survival;
  regression::AftData ad;
  ad.design = regression::build_design(d.data, covs);
  for (auto r : ad.design.rows) {
    ad.time.push_back(d.time[r]);
    ad.status.push_back(d.status[r]);
  }
  json fits = json::array();
  std::optional<std::string> best;
  double best_aic = 0.0;
  for (const auto& name : dists) {
    const auto dist = regression::parse_distribution(name);
    try {
      const auto fit = regression::fit_aft(ad, dist);
      fits.push_back(to_json(fit));
      if (fit.converged && std::isfinite(fit.aic) && (!best || fit.aic < best_aic)) {
        best = name;
        best_aic = fit.aic;
      }
    } catch (const Error& e) {
      fits.push_back({{"distribution", name}, {"error", e.to_json()}});
    }
  }
  return {{"fits", fits}, {"best", best ? json(*best) : json(nullptr)}};
}

// ---- multi-state analyses ----

json run_counts(const Bound& b, Params& p) {
  p.finish();
  const auto data = b.sample->long_format();
  json out = to_json(dataio::count_transitions(data), data.system);
  out["zero_sojourn_adjusted"] = data.zero_sojourn_adjusted;
  return out;
}

json run_msmreg(const Bound& b, Params& p) {
  const auto covs = p.get<Strings>("covariates", b.sample->idm ? b.sample->idm->covariates : b.sample->msm->covariates);
  const auto clock = msmprob::parse_clock(p.get<std::string>("clock", "markov"));
  const auto ties = regression::parse_ties(p.get<std::string>("ties", "efron"));
  const auto only = p.optional<int>("transition");
  p.finish();
  const auto data = b.sample->long_format();
  json fits = json::array();
  for (const auto& f : msmprob::per_transition_cox(data, covs, clock, ties, only)) {
    json j = to_json(f);
    j["label"] = serialize::transition_label(data.system, f.from, f.to);
    fits.push_back(std::move(j));
  }
  return {{"clock", msmprob::to_string(clock)}, {"fits", fits}};
}

json run_transprob(const Bound& b, Params& p, std::uint64_t fallback_seed) {
  msmprob::TransProbRequest req;
  req.method = msmprob::parse_method(p.get<std::string>("method", "aj"));
  req.s = p.get<double>("s", 0.0);
  req.grid = sorted_grid(p.get<Doubles>("grid", {}));
  req.from_state = p.optional<int>("from_state");
  const auto covariate = p.optional<std::string>("covariate");
  const auto value = p.optional<double>("value");
  const auto bandwidth = p.optional<double>("bandwidth");
  req.covariates = p.get<Strings>("covariates", b.sample->idm ? b.sample->idm->covariates : b.sample->msm->covariates);
  req.profile = p.profile("profile");
  req.ties = regression::parse_ties(p.get<std::string>("ties", "efron"));
  req.n_boot = p.get<int>("n_boot", 199);
  req.conf_level = conf_level(p);
  req.seed = seed_of(p, fallback_seed);
  p.finish();
  if (req.n_boot != 0 && req.n_boot < 2) fail_validation("InvalidParameter", "n_boot must be 0 or at least 2", {{"n_boot", req.n_boot}});
  if (covariate) {
    if (!value) fail_validation("MissingParameter", "kernel conditioning needs 'value'", {{"parameter", "value"}});
    req.kernel = msmprob::KernelCondition{*covariate, *value, bandwidth};
  }
  const auto m = msmprob::transition_probabilities(*b.sample, req);
  json out = to_json(m, b.sample->system);
  if (req.method == msmprob::Method::ipcw && req.kernel) {
    out["conditioning"] = {{"covariate", req.kernel->covariate}, {"value", req.kernel->value}};
  } else if (req.method == msmprob::Method::breslow) {
    out["conditioning"] = p.echo()["profile"];
  } else {
    out["conditioning"] = nullptr;
  }
  return out;
}

json run_cif(const Bound& b, Params& p, std::uint64_t fallback_seed) {
  const auto& idm = b.sample->require_idm("the cumulative incidence of illness");
  auto grid = sorted_grid(p.get<Doubles>("grid", {}));
  const auto covariate = p.optional<std::string>("covariate");
  const auto level = p.optional_text("level");
  const auto value = p.optional<double>("value");
  const auto bandwidth = p.optional<double>("bandwidth");
  const int n_boot = p.get<int>("n_boot", 199);
  const double conf = conf_level(p);
  const auto seed = seed_of(p, fallback_seed);
  p.finish();
  if (n_boot != 0 && n_boot < 2) fail_validation("InvalidParameter", "n_boot must be 0 or at least 2", {{"n_boot", n_boot}});
  if (grid.empty()) {
    std::set<double> t;
    for (std::size_t i = 0; i < idm.n(); ++i) {
      if (idm.event1[i] == 1) t.insert(idm.time1[i]);
    }
    grid.assign(t.begin(), t.end());
    if (grid.empty()) fail_computation("NoEvents", "no observed entries into state 2");
  }
  std::optional<msmprob::CifCondition> cond;
  if (covariate) {
    if (level.has_value() == value.has_value()) {
      fail_validation("InvalidParameter", "conditioning needs exactly one of 'level' or 'value'");
    }
    cond = msmprob::CifCondition{*covariate, level, value, bandwidth};
  } else if (level || value) {
    fail_validation("MissingParameter", "conditioning needs 'covariate'", {{"parameter", "covariate"}});
  }
  auto res = msmprob::cumulative_incidence(idm, grid, cond);
  if (n_boot > 0) {
    const auto boot = msmprob::bootstrap(
        *b.sample, [&](const msmprob::Sample& s) { return msmprob::cumulative_incidence(*s.idm, grid, cond).illness; },
        {n_boot, conf, seed, 0});
    res.lower = boot.lower;
    res.upper = boot.upper;
    res.n_boot = n_boot;
    if (boot.n_failed > 0) {
      res.flags.push_back({"BootstrapFailures", std::to_string(boot.n_failed) + " bootstrap replicates failed and were dropped"});
    }
  }
  return to_json(res);
}

json run_markov_local(const Bound& b, Params& p, std::uint64_t fallback_seed) {
  const auto method = p.get<std::string>("method", "auc");
  if (method != "auc" && method != "logrank") {
    fail_validation("InvalidParameter", "local test method must be auc or logrank", {{"method", method}});
  }
  Doubles svals;
  {
    const auto raw = p.require<json>("s");
    try {
      svals = raw.is_array() ? raw.get<Doubles>() : Doubles{raw.get<double>()};
    } catch (const json::exception&) {
      fail_validation("InvalidParameter", "'s' must be a number or an array of numbers");
    }
    if (svals.empty()) fail_validation("InvalidParameter", "'s' needs at least one landmark time");
    p.set_echo("s", raw.is_array() ? json(svals) : json(svals.front()));
  }
  const auto [from, to] = p.transition("transition");
  const int n_boot = positive_int(p, "n_boot", 100, 2);
  const auto comparator = markovcheck::parse_comparator(p.get<std::string>("comparator", "auto"));
  const double alpha = p.get<double>("alpha", 0.05);
  const auto seed = seed_of(p, fallback_seed);
  p.finish();
  json results = json::array(), pvals = json::array(), stats_ = json::array();
  int rejections = 0;
  for (std::size_t i = 0; i < svals.size(); ++i) {
    const auto r = method == "auc"
                       ? markovcheck::local_auc_test(*b.sample, svals[i], from, to,
                                                     {n_boot, stats::substream_seed(seed, i), comparator})
                       : markovcheck::local_logrank_test(*b.sample, svals[i], from, to);
    results.push_back(to_json(r));
    pvals.push_back(serialize::number(r.p_value));
    stats_.push_back(serialize::number(r.statistic));
    if (r.p_value < alpha) ++rejections;
  }
  json out = {{"method", method},
              {"transition", {{"from", from}, {"to", to}}},
              {"s_values", svals},
              {"p_values", pvals},
              {"statistics", stats_},
              {"alpha", alpha},
              {"results", results},
              {"seed", seed}};
  if (method == "auc") out["n_boot"] = n_boot;
  return out;
}

json run_markov_global(const Bound& b, Params& p, std::uint64_t fallback_seed) {
  const auto method = p.get<std::string>("method", "cox");
  if (method != "cox" && method != "auc" && method != "logrank") {
    fail_validation("InvalidParameter", "global test method must be cox, auc or logrank", {{"method", method}});
  }
  const auto [from, to] = p.transition("transition");
  const auto clock = msmprob::parse_clock(p.get<std::string>("clock", "markov"));
  const auto ties = regression::parse_ties(p.get<std::string>("ties", "efron"));
  const auto percentiles = p.get<Doubles>("percentiles", markovcheck::default_percentiles());
  const int n_boot = positive_int(p, "n_boot", 100, 2);
  const int n_perm = positive_int(p, "n_perm", 500, 1);
  const double alpha = p.get<double>("alpha", 0.05);
  const auto comparator = markovcheck::parse_comparator(p.get<std::string>("comparator", "auto"));
  const auto seed = seed_of(p, fallback_seed);
  p.finish();
  json out;
  if (method == "cox") {
    out = to_json(markovcheck::global_cox_test(*b.sample, from, to, clock, ties));
    out["reject"] = out["p_value"].is_number() && out["p_value"].get<double>() < alpha;
  } else if (method == "auc") {
    out = to_json(markovcheck::global_auc_test(*b.sample, from, to, {percentiles, n_boot, alpha, seed, comparator}));
  } else {
    out = to_json(markovcheck::global_logrank_test(*b.sample, from, to, {percentiles, n_perm, seed}));
  }
  out["alpha"] = alpha;
  return out;
}

}  // namespace

MappingKind parse_kind(const std::string& name) {
  if (name == "survival") return MappingKind::survival;
  if (name == "idm") return MappingKind::idm;
  if (name == "msm") return MappingKind::msm;
  fail_validation("InvalidKind", "model kind must be survival, idm or msm", {{"kind", name}});
}

const char* to_string(MappingKind kind) {
  switch (kind) {
    case MappingKind::survival: return "survival";
    case MappingKind::idm: return "idm";
    case MappingKind::msm: return "msm";
  }
  return "survival";
}

Bound bind(const dataio::Dataset& data, MappingKind kind, const json& mapping) {
  Params m(mapping, "mapping");
  Bound b;
  b.kind = kind;
  b.report = {{"n_rows", data.n_rows()}};
  switch (kind) {
    case MappingKind::survival: {
      dataio::SurvivalMapping sm{m.get<std::string>("time", "time"), m.get<std::string>("status", "status"),
                                 m.get<Strings>("covariates", {})};
      m.finish();
      b.survival = dataio::bind_survival(data, sm);
      b.report["n_used"] = b.survival->n();
      b.report["dropped"] = b.survival->dropped;
      break;
    }
    case MappingKind::idm: {
      dataio::IdmMapping im{m.get<std::string>("time1", "time1"), m.get<std::string>("event1", "event1"),
                            m.get<std::string>("stime", "Stime"), m.get<std::string>("event", "event"),
                            m.get<Strings>("covariates", {})};
      const auto labels = m.get<Strings>("labels", {"healthy", "diseased", "dead"});
      const int offset = m.get<int>("display_offset", 1);
      m.finish();
      auto system = dataio::idm_transition_system(labels);
      system.set_display_offset(offset);
      b.sample = msmprob::make_sample(dataio::bind_idm(data, im), system);
      b.report["n_used"] = b.sample->n();
      b.report["dropped"] = b.sample->idm->dropped;
      break;
    }
    case MappingKind::msm: {
      auto labels = m.get<Strings>("labels", {});
      const int n_states = m.get<int>("n_states", static_cast<int>(labels.size()));
      if (labels.empty()) {
        for (int s = 1; s <= n_states; ++s) labels.push_back("state " + std::to_string(s));
      }
      std::vector<std::pair<int, int>> edges;
      for (const auto& e : m.require<json>("transitions")) {
        try {
          edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
        } catch (const json::exception&) {
          fail_validation("InvalidParameter", "transitions must be [from, to] pairs");
        }
      }
      std::vector<dataio::StateColumns> cols;
      for (const auto& c : m.require<json>("state_columns")) {
        try {
          cols.push_back({c.at("time").get<std::string>(), c.at("status").get<std::string>()});
        } catch (const json::exception&) {
          fail_validation("InvalidParameter", "state_columns entries must be {time, status}");
        }
      }
      const auto covs = m.get<Strings>("covariates", {});
      const auto priority = m.get<std::vector<int>>("priority", {});
      const int offset = m.get<int>("display_offset", 1);
      m.finish();
      auto system = dataio::build_transition_system(n_states, labels, edges);
      system.set_display_offset(offset);
      b.sample = msmprob::make_sample(dataio::bind_msm(data, {system, cols, covs, priority}));
      b.report["n_used"] = b.sample->n();
      b.report["dropped"] = b.sample->msm->dropped;
      break;
    }
  }
  if (b.sample) {
    const auto lf = b.sample->long_format();
    b.report["zero_sojourn_adjusted"] = lf.zero_sojourn_adjusted;
    b.report["n_states"] = lf.system.n_states();
    b.report["n_transitions"] = lf.system.n_transitions();
  }
  b.mapping = m.echo();
  return b;
}

const std::vector<std::string>& analysis_names() {
  static const std::vector<std::string> names{"km",     "ranktest",  "cox",  "phtest", "anova",        "aft",
                                              "counts", "msmreg",    "transprob", "cif", "markov/local", "markov/global"};
  return names;
}

bool is_analysis(const std::string& name) {
  const auto& n = analysis_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

json run(const std::string& name, const Bound& b, const json& params, std::uint64_t fallback_seed) {
  Params p(params);
  // Deterministic analyses accept a seed so callers can pass one uniformly.
  static const std::set<std::string> seeded{"transprob", "cif", "markov/local", "markov/global"};
  if (!seeded.count(name) && p.has("seed")) p.get<std::uint64_t>("seed", 0);
  json result;
  if (name == "km" || name == "ranktest" || name == "cox" || name == "phtest" || name == "anova" || name == "aft") {
    require_kind(b, {MappingKind::survival}, name);
    if (name == "km") result = run_km(b, p);
    if (name == "ranktest") result = run_ranktest(b, p);
    if (name == "cox") result = run_cox(b, p);
    if (name == "phtest") result = run_phtest(b, p);
    if (name == "anova") result = run_anova(b, p);
    if (name == "aft") result = run_aft(b, p);
  } else if (name == "cif") {
    require_kind(b, {MappingKind::idm}, name);
    result = run_cif(b, p, fallback_seed);
  } else if (is_analysis(name)) {
    require_kind(b, {MappingKind::idm, MappingKind::msm}, name);
    if (name == "counts") result = run_counts(b, p);
    if (name == "msmreg") result = run_msmreg(b, p);
    if (name == "transprob") result = run_transprob(b, p, fallback_seed);
    if (name == "markov/local") result = run_markov_local(b, p, fallback_seed);
    if (name == "markov/global") result = run_markov_global(b, p, fallback_seed);
  } else {
    fail_validation("UnknownAnalysis", "no analysis named '" + name + "'", {{"analysis", name}});
  }
  return {{"analysis", name}, {"params", p.echo()}, {"result", result}};
}

std::string dump(const json& result) { return result.dump(2); }

std::string version() {
  return json{{"name", "msm"}, {"version", MSM_VERSION}}.dump();
}

std::uint64_t fresh_seed() {
  std::random_device rd;
  const std::uint64_t hi = rd(), lo = rd();
  return ((hi << 32) | lo) & ((std::uint64_t{1} << 53) - 1);
}

}  // namespace msm::analysis
