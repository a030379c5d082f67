#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "msm/dataio.hpp"
#include "msm/error.hpp"
#include "simulate.hpp"

using namespace msm;
using testing::csv;

namespace {

std::string code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST_CASE("numeric columns are inferred and missing cells recognised") {
  const auto d = csv("a,b,c\n1,x,\n2.5,y,NA\nNA,x,3\n");
  CHECK(d.n_rows() == 3);
  CHECK(d.column("a").kind == dataio::ColumnKind::numeric);
  CHECK(d.column("a").is_missing(2));
  CHECK(std::isnan(d.column("a").numeric[2]));
  CHECK(d.column("b").kind == dataio::ColumnKind::categorical);
  CHECK(d.column("b").levels == std::vector<std::string>{"x", "y"});
  CHECK(d.column("c").is_missing(0));
  CHECK(d.column("c").is_missing(1));
  CHECK(d.column("c").numeric[2] == 3.0);
}

TEST_CASE("semicolon files are detected") {
  const auto d = csv("time;status\n1,5;1\n2;0\n");
  CHECK(d.n_cols() == 2);
  CHECK(d.column("time").kind != dataio::ColumnKind::numeric);
  const auto e = csv("time;status\n1;1\n2;0\n");
  CHECK(e.column("status").numeric == std::vector<double>{1, 0});
}

TEST_CASE("csv round trip preserves every fixture") {
  for (const auto* name : {"veteran.csv", "colonIDM.csv", "ebmt4.csv", "aml.csv"}) {
    CAPTURE(name);
    const auto d = dataio::read_csv_file(testing::fixture(name));
    CHECK(dataio::parse_csv(dataio::to_csv(d)) == d);
  }
}

TEST_CASE("csv parsing errors") {
  CHECK(code_of([] { csv(""); }) == "EmptyFile");
  CHECK(code_of([] { csv(" \n\n"); }) == "EmptyFile");
  CHECK(code_of([] { csv("a,b\n1,2,3\n"); }) == "RaggedRows");
  CHECK(code_of([] { csv("a,a\n1,2\n"); }) == "DuplicateColumnName");
  CHECK(code_of([] { dataio::read_csv_file("/nonexistent/file.csv"); }) == "FileNotFound");
}

TEST_CASE("survival binding drops rows with missing time or status") {
  const auto d = csv("time,status,x\n5,1,a\n,1,b\n7,0,a\n8,NA,b\n");
  const auto s = dataio::bind_survival(d, {"time", "status", {"x"}});
  CHECK(s.n() == 2);
  CHECK(s.dropped == 2);
  CHECK(s.time == std::vector<double>{5, 7});
  CHECK(s.data.column("x").raw == std::vector<std::string>{"a", "a"});
  CHECK(code_of([&] { dataio::bind_survival(d, {"time", "nope", {}}); }) == "MissingColumn");
  CHECK(code_of([&] { dataio::bind_survival(csv("time,status\n1,2\n"), {"time", "status", {}}); }) == "NonBinaryStatus");
  CHECK(code_of([&] { dataio::bind_survival(csv("time,status\n-1,1\n"), {"time", "status", {}}); }) == "NegativeTime");
}

TEST_CASE("illness-death binding enforces time1 <= Stime") {
  const auto d = csv("t1,e1,st,e\n5,1,3,1\n2,1,4,0\n");
  try {
    dataio::bind_idm(d, {"t1", "e1", "st", "e", {}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == "InconsistentTimes");
    CHECK(e.detail().dump().find('1') != std::string::npos);
  }
}

TEST_CASE("transition systems number edges row-major") {
  const auto s = dataio::build_transition_system(4, {"a", "b", "c", "d"}, {{2, 3}, {1, 4}, {1, 2}, {3, 4}});
  CHECK(s.transition(1, 2) == 1);
  CHECK(s.transition(1, 4) == 2);
  CHECK(s.transition(2, 3) == 3);
  CHECK(s.transition(3, 4) == 4);
  CHECK(s.transition(2, 1) == 0);
  CHECK(s.progressive());
  const auto idm = dataio::idm_transition_system();
  CHECK(idm.n_transitions() == 3);
  CHECK(idm.transition(2, 3) == 3);
  CHECK(idm.absorbing(3));
  const auto rev = dataio::build_transition_system(3, {"a", "b", "c"}, {{1, 2}, {2, 1}, {2, 3}});
  CHECK_FALSE(rev.progressive());
  CHECK(code_of([] { dataio::build_transition_system(3, {"a", "b", "c"}, {{1, 1}}); }) == "SelfTransition");
  CHECK(code_of([] { dataio::build_transition_system(3, {"a", "b", "c"}, {{1, 4}}); }) == "EdgeOutOfRange");
  CHECK(code_of([] { dataio::build_transition_system(3, {"a", "b", "c"}, {{1, 2}, {1, 2}}); }) == "DuplicateEdge");
}

TEST_CASE("long format of a hand-built illness-death sample") {
  // Subject 1 falls ill at 3 and dies at 7; subject 2 dies at 4 without
  // illness; subject 3 is ill at 2 and censored at 9; subject 4 is censored at 5.
  const auto d = csv("time1,event1,Stime,event\n3,1,7,1\n4,0,4,1\n2,1,9,0\n5,0,5,0\n");
  const auto idm = dataio::bind_idm(d, {"time1", "event1", "Stime", "event", {}});
  const auto lf = dataio::to_long_format(idm, dataio::idm_transition_system());
  struct Row {
    int subject, from, to, trans;
    double tstart, tstop;
    int status;
  };
  const std::vector<Row> expected{
      {0, 1, 2, 1, 0, 3, 1}, {0, 1, 3, 2, 0, 3, 0}, {0, 2, 3, 3, 3, 7, 1},  //
      {1, 1, 2, 1, 0, 4, 0}, {1, 1, 3, 2, 0, 4, 1},                         //
      {2, 1, 2, 1, 0, 2, 1}, {2, 1, 3, 2, 0, 2, 0}, {2, 2, 3, 3, 2, 9, 0},  //
      {3, 1, 2, 1, 0, 5, 0}, {3, 1, 3, 2, 0, 5, 0}};
  REQUIRE(lf.rows.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CAPTURE(i);
    const auto& r = lf.rows[i];
    const auto& e = expected[i];
    CHECK(r.subject == e.subject);
    CHECK(r.from == e.from);
    CHECK(r.to == e.to);
    CHECK(r.trans == e.trans);
    CHECK(r.tstart == e.tstart);
    CHECK(r.tstop == e.tstop);
    CHECK(r.duration == e.tstop - e.tstart);
    CHECK(r.status == e.status);
  }
  CHECK(lf.zero_sojourn_adjusted == 0);
  const auto counts = dataio::count_transitions(lf);
  CHECK(counts.counts[0] == std::vector<long>{0, 2, 1});
  CHECK(counts.counts[1] == std::vector<long>{0, 0, 1});
  CHECK(counts.no_event[0] == 1);
  CHECK(counts.no_event[1] == 1);
}

TEST_CASE("zero sojourns are stretched without reaching other observed times") {
  const auto d = csv("time1,event1,Stime,event\n3,1,3,1\n4,0,4,1\n");
  const auto idm = dataio::bind_idm(d, {"time1", "event1", "Stime", "event", {}});
  const auto lf = dataio::to_long_format(idm, dataio::idm_transition_system());
  CHECK(lf.zero_sojourn_adjusted == 1);
  for (const auto& r : lf.rows) {
    CHECK(r.tstart < r.tstop);
    if (r.from == 2) {
      CHECK(r.tstop > 3.0);
      CHECK(r.tstop < 4.0);
    }
  }
}

TEST_CASE("colon transition counts match a direct tally of the wide file") {
  const auto d = dataio::read_csv_file(testing::fixture("colonIDM.csv"));
  const auto& e1 = d.column("event1").numeric;
  const auto& e = d.column("event").numeric;
  const auto& t1 = d.column("time1").numeric;
  const auto& st = d.column("Stime").numeric;
  long n12 = 0, n13 = 0, n23 = 0;
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    if (e1[i] == 1) {
      ++n12;
      if (e[i] == 1) ++n23;
    } else if (e[i] == 1) {
      ++n13;
    }
    CHECK(t1[i] <= st[i]);
  }
  const auto idm = dataio::bind_idm(d, {"time1", "event1", "Stime", "event", {}});
  const auto counts = dataio::count_transitions(dataio::to_long_format(idm, dataio::idm_transition_system()));
  CHECK(counts.counts[0][1] == n12);
  CHECK(counts.counts[0][2] == n13);
  CHECK(counts.counts[1][2] == n23);
  for (const auto& row : counts.proportions) {
    double sum = 0.0;
    for (double p : row) sum += p;
    if (sum > 0) CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("general multi-state binding reconstructs ebmt4 paths") {
  const auto d = dataio::read_csv_file(testing::fixture("ebmt4.csv"));
  const auto sys = dataio::build_transition_system(
      6, {"Tx", "Rec", "AE", "Rec+AE", "Rel", "Death"},
      {{1, 2}, {1, 3}, {1, 5}, {1, 6}, {2, 4}, {2, 5}, {2, 6}, {3, 4}, {3, 5}, {3, 6}, {4, 5}, {4, 6}});
  const std::vector<dataio::StateColumns> cols{
      {"rec", "rec.s"}, {"ae", "ae.s"}, {"recae", "recae.s"}, {"rel", "rel.s"}, {"srv", "srv.s"}};
  const auto msm = dataio::bind_msm(d, {sys, cols, {"match"}, {}});
  const auto lf = dataio::to_long_format(msm);
  // Every subject's episodes chain in time and start in state 1.
  std::map<int, double> last_stop;
  for (const auto& e : lf.episodes) {
    if (!last_stop.count(e.subject)) {
      CHECK(e.state == 1);
      CHECK(e.tstart == 0.0);
    } else {
      CHECK(e.tstart == last_stop[e.subject]);
    }
    CHECK(e.tstart < e.tstop);
    last_stop[e.subject] = e.tstop;
  }
  CHECK(last_stop.size() == d.n_rows());
  const auto counts = dataio::count_transitions(lf);
  CHECK(counts.counts[0][1] == 785);
  CHECK(counts.counts[0][2] == 907);
  CHECK(counts.counts[0][4] == 95);
  CHECK(counts.counts[0][5] == 160);
  CHECK(code_of([&] { dataio::bind_msm(d, {sys, {cols[0]}, {}, {}}); }) == "StateColumnCount");
}

TEST_CASE("resampling keeps categorical level sets") {
  const auto d = csv("g,t\na,1\nb,2\nc,3\n");
  const std::vector<std::size_t> rows{2, 2, 0};
  const auto r = d.select_rows(rows);
  CHECK(r.n_rows() == 3);
  CHECK(r.column("g").levels == d.column("g").levels);
  CHECK(r.column("g").codes == std::vector<int>{2, 2, 0});
}
