#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>

#include "msm/analysis.hpp"
#include "simulate.hpp"

using namespace msm;
using analysis::json;

namespace {

struct Outcome {
  int exit_code;
  std::string out;
};

Outcome run_cli(const std::string& args) {
  const std::string cmd = std::string(MSM_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

}  // namespace

TEST_CASE("cli reports the veteran log-rank result") {
  const auto r = run_cli("ranktest --input " + testing::fixture("veteran.csv") + " --time time --status status --group celltype");
  REQUIRE(r.exit_code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["result"]["df"] == 3);
  CHECK(j["result"]["p_value"].get<double>() < 1e-4);
}

TEST_CASE("cli identity rows at t = s") {
  const auto r = run_cli("transprob --input " + testing::fixture("colonIDM.csv") + " --method aj --s 0 --grid 0 --n-boot 0");
  REQUIRE(r.exit_code == 0);
  for (const auto& c : json::parse(r.out)["result"]["curves"]) {
    CHECK(c["grid"][0]["est"].get<double>() == (c["from"] == c["to"] ? 1.0 : 0.0));
  }
}

TEST_CASE("cli exit codes separate validation from computation errors") {
  CHECK(run_cli("km --input " + testing::fixture("veteran.csv") + " --time nope").exit_code == 2);
  CHECK(run_cli("km").exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("km --input " + testing::fixture("veteran.csv") + " --conf-level abc").exit_code == 2);
  const std::string path = "/tmp/msm_cli_few_events.csv";
  std::ofstream(path) << "time,status,x\n1,1,0.3\n2,1,0.9\n3,0,0.1\n4,0,0.5\n";
  CHECK(run_cli("phtest --input " + path + " --covariates x").exit_code == 3);
  const auto v = run_cli("--version");
  CHECK(v.exit_code == 0);
  CHECK(json::parse(v.out)["name"] == "msm");
}

TEST_CASE("cli writes plot data for curve results") {
  const std::string path = "/tmp/msm_cli_plot.csv";
  std::remove(path.c_str());
  const auto r = run_cli("km --input " + testing::fixture("veteran.csv") + " --group celltype --emit-plot-data " + path);
  REQUIRE(r.exit_code == 0);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "group,time,surv,lower,upper");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows > 20);
}

TEST_CASE("cli output is the dispatcher's output") {
  const auto data = dataio::read_csv_file(testing::fixture("colonIDM.csv"));
  const auto bound = analysis::bind(data, analysis::MappingKind::idm, json::object());
  const auto expected = analysis::dump(
      analysis::run("markov/global", bound, {{"method", "cox"}, {"transition", {2, 3}}, {"seed", 5}}, 0));
  const auto r = run_cli("markov-global --input " + testing::fixture("colonIDM.csv") + " --method cox --transition 2,3 --seed 5");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out == expected + "\n");
}
