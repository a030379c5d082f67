#include <doctest.h>

#include <cmath>

#include "msm/error.hpp"
#include "msm/msmprob.hpp"
#include "msm/survcore.hpp"
#include "simulate.hpp"

using namespace msm;
using msmprob::Method;

namespace {

const std::vector<double> yearly_grid{730, 1095, 1460, 1825};

msmprob::Sample colon() {
  const auto data = dataio::read_csv_file(testing::fixture("colonIDM.csv"));
  const auto idm = dataio::bind_idm(data, {"time1", "event1", "Stime", "event", {"age", "nodes", "rx"}});
  return msmprob::make_sample(idm, dataio::idm_transition_system());
}

msmprob::Sample ebmt4() {
  const auto data = dataio::read_csv_file(testing::fixture("ebmt4.csv"));
  const auto sys = dataio::build_transition_system(
      6, {"Tx", "Rec", "AE", "Rec+AE", "Rel", "Death"},
      {{1, 2}, {1, 3}, {1, 5}, {1, 6}, {2, 4}, {2, 5}, {2, 6}, {3, 4}, {3, 5}, {3, 6}, {4, 5}, {4, 6}});
  return msmprob::make_sample(dataio::bind_msm(
      data, {sys,
             {{"rec", "rec.s"}, {"ae", "ae.s"}, {"recae", "recae.s"}, {"rel", "rel.s"}, {"srv", "srv.s"}},
             {"match", "proph"},
             {}}));
}

// State occupied at t by a wide illness-death record (transitions at t count).
int state_at(const dataio::IdmData& d, std::size_t i, double t) {
  if (t < d.time1[i] || (d.event1[i] == 0 && t < d.stime[i])) return 1;
  if (d.event1[i] == 1 && t < d.stime[i]) return 2;
  return 3;
}

void check_rows_stochastic(const msmprob::TransitionMatrix& m, double tol) {
  for (std::size_t g = 0; g < m.grid.size(); ++g) {
    for (int h : m.from_states) {
      double sum = 0.0;
      bool all_nan = true;
      for (int j = 1; j <= m.n_states; ++j) {
        const double v = m.at(g, h, j);
        if (std::isnan(v)) continue;
        all_nan = false;
        sum += v;
        CHECK(v >= -tol);
        CHECK(v <= 1 + tol);
      }
      if (!all_nan) CHECK(std::fabs(sum - 1.0) <= tol);
    }
  }
}

}  // namespace

TEST_CASE("Aalen-Johansen in a two-state model is one minus Kaplan-Meier") {
  const auto data = dataio::read_csv_file(testing::fixture("veteran.csv"));
  const auto sys = dataio::build_transition_system(2, {"alive", "dead"}, {{1, 2}});
  const auto msm = dataio::bind_msm(data, {sys, {{"time", "status"}}, {}, {}});
  const auto lf = dataio::to_long_format(msm);
  const auto grid = msmprob::default_grid(lf, 0.0);
  const auto aj = msmprob::aalen_johansen(lf, 0.0, grid);
  const auto surv = dataio::bind_survival(data, {"time", "status", {}});
  const auto km = survcore::kaplan_meier(surv).at(0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    CHECK(std::fabs(aj.at(g, 1, 2) - (1.0 - km.at(grid[g]))) <= 1e-12);
    CHECK(std::fabs(aj.at(g, 1, 1) - km.at(grid[g])) <= 1e-12);
  }
}

TEST_CASE("transition matrices are the identity at t = s") {
  const auto lf = colon().long_format();
  const auto m = msmprob::aalen_johansen(lf, 365.0, {365.0, 400.0});
  for (int h = 1; h <= 3; ++h) {
    for (int j = 1; j <= 3; ++j) CHECK(m.at(0, h, j) == (h == j ? 1.0 : 0.0));
  }
}

TEST_CASE("Breslow plug-in without covariates reproduces Aalen-Johansen") {
  for (const auto& sample : {colon(), ebmt4()}) {
    const auto lf = sample.long_format();
    for (double s : {0.0, 365.0}) {
      const auto grid = msmprob::default_grid(lf, s);
      const auto aj = msmprob::aalen_johansen(lf, s, grid);
      const auto br = msmprob::breslow_conditional(lf, s, grid, {}, {});
      REQUIRE(aj.est.size() == br.est.size());
      double worst = 0.0;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        for (std::size_t c = 0; c < aj.est[g].size(); ++c) worst = std::max(worst, std::fabs(aj.est[g][c] - br.est[g][c]));
      }
      CHECK(worst <= 1e-12);
    }
  }
}

TEST_CASE("landmark estimators equal empirical occupancy without censoring") {
  testing::IdmSimulation sim;
  sim.n = 300;
  sim.censored = false;
  const auto sample = testing::idm_sample(testing::simulate_idm(sim, 99));
  const auto& d = *sample.idm;
  const std::vector<double> grid{500.3, 1000.7, 1800.1};
  for (double s : {0.0, 200.0, 365.0}) {
    CAPTURE(s);
    const auto lm = msmprob::landmark_idm(d, s, grid);
    const auto plm = msmprob::presmoothed_landmark_idm(d, s, grid);
    const auto lf = sample.long_format();
    for (int h : {1, 2}) {
      std::vector<std::size_t> set;
      for (std::size_t i = 0; i < d.n(); ++i) {
        if (state_at(d, i, s) == h && (h == 1 ? d.time1[i] > s : true)) set.push_back(i);
      }
      if (set.empty()) continue;
      const auto lmaj = msmprob::landmark_aalen_johansen(lf, s, h, grid);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        for (int j = h; j <= 3; ++j) {
          double count = 0.0;
          for (auto i : set) count += state_at(d, i, grid[g]) == j;
          const double frac = count / static_cast<double>(set.size());
          CHECK(std::fabs(lm.at(g, h, j) - frac) <= 1e-12);
          CHECK(std::fabs(plm.at(g, h, j) - frac) <= 1e-12);
          CHECK(std::fabs(lmaj.at(g, h, j) - frac) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("kernel IPCW with a very wide bandwidth is the unconditional estimate") {
  const auto sample = colon();
  const auto& d = *sample.idm;
  const auto base = msmprob::ipcw_conditional(d, 365.0, yearly_grid, std::nullopt);
  const auto wide = msmprob::ipcw_conditional(d, 365.0, yearly_grid, msmprob::KernelCondition{"age", 60.0, 1e9});
  for (std::size_t g = 0; g < yearly_grid.size(); ++g) {
    for (std::size_t c = 0; c < base.est[g].size(); ++c) {
      if (std::isnan(base.est[g][c])) continue;
      CHECK(wide.est[g][c] == doctest::Approx(base.est[g][c]).epsilon(1e-9));
    }
  }
  const auto narrow = msmprob::ipcw_conditional(d, 365.0, yearly_grid, msmprob::KernelCondition{"age", 60.0, {}});
  check_rows_stochastic(narrow, 1e-10);
  const auto far = msmprob::ipcw_conditional(d, 365.0, yearly_grid, msmprob::KernelCondition{"age", 99.0, {}});
  bool flagged = false;
  for (const auto& f : far.flags) flagged |= f.code == "ExtrapolationWarning";
  CHECK(flagged);
}

TEST_CASE("every method gives row-stochastic matrices on colon and ebmt4") {
  const auto c = colon();
  for (auto method : {Method::aj, Method::lm, Method::plm, Method::lmaj, Method::ipcw, Method::breslow}) {
    CAPTURE(msmprob::to_string(method));
    msmprob::TransProbRequest req;
    req.method = method;
    req.s = 365;
    req.grid = yearly_grid;
    if (method == Method::breslow) {
      req.covariates = {"age", "rx"};
      req.profile = {{"age", "60"}, {"rx", "Obs"}};
    }
    check_rows_stochastic(msmprob::transition_probabilities(c, req), 1e-10);
  }
  const auto e = ebmt4();
  for (auto method : {Method::aj, Method::lmaj, Method::breslow}) {
    msmprob::TransProbRequest req;
    req.method = method;
    req.s = 365;
    req.grid = yearly_grid;
    if (method == Method::breslow) {
      req.covariates = {"match"};
      req.profile = {{"match", "no gender mismatch"}};
    }
    check_rows_stochastic(msmprob::transition_probabilities(e, req), 1e-10);
  }
  msmprob::TransProbRequest lm;
  lm.method = Method::lm;
  CHECK_THROWS_AS(msmprob::transition_probabilities(e, lm), Error);
}

TEST_CASE("grids before s are rejected") {
  const auto lf = colon().long_format();
  CHECK_THROWS_AS(msmprob::aalen_johansen(lf, 365.0, {100.0}), Error);
  CHECK_THROWS_AS(msmprob::aalen_johansen(lf, 0.0, {5.0, 3.0}), Error);
}

TEST_CASE("cumulative incidence partitions the initial state's exits") {
  const auto sample = colon();
  const auto& d = *sample.idm;
  const auto lf = sample.long_format();
  const auto grid = msmprob::default_grid(lf, 0.0);
  const auto cif = msmprob::cumulative_incidence(d, grid);
  const auto aj = msmprob::aalen_johansen(lf, 0.0, grid);
  double prev = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    CHECK(std::fabs(cif.illness[g] + cif.direct_death[g] + cif.initial[g] - 1.0) <= 1e-12);
    CHECK(std::fabs(cif.initial[g] - aj.at(g, 1, 1)) <= 1e-12);
    CHECK(cif.illness[g] >= prev - 1e-15);
    prev = cif.illness[g];
  }
  const auto sub = msmprob::cumulative_incidence(d, grid, msmprob::CifCondition{"rx", std::string("Obs"), {}, {}});
  for (std::size_t g = 0; g < grid.size(); ++g) {
    CHECK(std::fabs(sub.illness[g] + sub.direct_death[g] + sub.initial[g] - 1.0) <= 1e-12);
  }
  CHECK_THROWS_AS(msmprob::cumulative_incidence(d, grid, msmprob::CifCondition{"rx", std::string("nope"), {}, {}}),
                  Error);
  const auto cont = msmprob::cumulative_incidence(d, grid, msmprob::CifCondition{"age", {}, 60.0, {}});
  prev = 0.0;
  for (double v : cont.illness) {
    CHECK(v >= prev - 1e-15);
    CHECK(v <= 1.0 + 1e-12);
    prev = v;
  }
}

TEST_CASE("bootstrap is deterministic and independent of thread count") {
  const auto sample = colon();
  auto est = [](const msmprob::Sample& s) {
    msmprob::TransProbRequest req;
    req.s = 365;
    req.grid = {730, 1095};
    return msmprob::estimate(s, req).est[0];
  };
  const auto a = msmprob::bootstrap(sample, est, {20, 0.9, 42, 1});
  const auto b = msmprob::bootstrap(sample, est, {20, 0.9, 42, 4});
  const auto c = msmprob::bootstrap(sample, est, {20, 0.9, 43, 1});
  CHECK(a.replicates == b.replicates);
  CHECK(a.lower == b.lower);
  CHECK(a.replicates != c.replicates);
  CHECK(msmprob::resample_indices(10, 5, 3) == msmprob::resample_indices(10, 5, 3));
}

TEST_CASE("two bootstrap replicates give the min-max interval") {
  const auto sample = colon();
  auto mean_time = [](const msmprob::Sample& s) {
    double sum = 0.0;
    for (double t : s.idm->stime) sum += t;
    return std::vector<double>{sum / static_cast<double>(s.n())};
  };
  const auto r = msmprob::bootstrap(sample, mean_time, {2, 0.95, 8, 1});
  REQUIRE(r.replicates.size() == 2);
  const double lo = std::min(r.replicates[0][0], r.replicates[1][0]);
  const double hi = std::max(r.replicates[0][0], r.replicates[1][0]);
  CHECK(r.lower[0] == lo);
  CHECK(r.upper[0] == hi);
}

TEST_CASE("bootstrap intervals bracket the estimate on colon") {
  msmprob::TransProbRequest req;
  req.method = Method::aj;
  req.s = 365;
  req.grid = yearly_grid;
  req.n_boot = 50;
  req.seed = 3;
  const auto m = msmprob::transition_probabilities(colon(), req);
  REQUIRE(m.lower.size() == yearly_grid.size());
  for (std::size_t g = 0; g < yearly_grid.size(); ++g) {
    CHECK(m.lower[g][0] <= m.est[g][0] + 0.02);
    CHECK(m.upper[g][0] >= m.est[g][0] - 0.02);
    CHECK(m.lower[g][0] <= m.upper[g][0]);
  }
}

TEST_CASE("per-transition Cox fits cover every transition and flag empty ones") {
  const auto lf = colon().long_format();
  const auto fits = msmprob::per_transition_cox(lf, {"age", "rx"}, msmprob::ClockMode::markov);
  REQUIRE(fits.size() == 3);
  for (const auto& f : fits) {
    CHECK(f.fit.has_value());
    CHECK(f.n_events > 0);
  }
  const auto reset = msmprob::per_transition_cox(lf, {"age"}, msmprob::ClockMode::semi_markov, regression::Ties::efron, 3);
  REQUIRE(reset.size() == 1);
  const auto cd = msmprob::transition_cox_data(lf, 3, {"age"}, msmprob::ClockMode::semi_markov);
  for (std::size_t i = 0; i < cd.n(); ++i) CHECK(cd.start[i] == 0.0);

  const auto d = testing::csv("time1,event1,Stime,event\n5,0,5,1\n4,0,4,1\n9,0,9,0\n");
  const auto idm = dataio::bind_idm(d, {"time1", "event1", "Stime", "event", {}});
  const auto lf2 = dataio::to_long_format(idm, dataio::idm_transition_system());
  const auto empty = msmprob::per_transition_cox(lf2, {}, msmprob::ClockMode::markov);
  CHECK(empty[0].error.has_value());
  CHECK(empty[0].error->code == "NoEvents");
}
