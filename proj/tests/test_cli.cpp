#include <gtest/gtest.h>

#include <sstream>

#include "qcest/cli.hpp"
#include "support.hpp"

using namespace qcest;
using qcest::testing::slurp;
using qcest::testing::temp_path;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

} // namespace

TEST(Cli, FmReportsBothBounds) {
  const auto path = temp_path("r.json");
  const auto r = run_cli({"fm", "--ensemble", "tetra", "--dps", "0", "--out", path});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = io::read_json_file(path);
  EXPECT_NEAR(j["upper"]["value"].get<double>(), 2.0 / 3, 1e-4);
  EXPECT_GE(j["lower"]["value"].get<double>(), 0.6666);
  EXPECT_EQ(j["upper"]["kind"], "exact");
  EXPECT_FALSE(j["gap_flagged"].get<bool>());
  EXPECT_EQ(j["provenance"]["seed"].get<int>(), 42);
  EXPECT_TRUE(j["provenance"].contains("tool_version"));
  EXPECT_TRUE(j["provenance"].contains("tolerances"));
}

TEST(Cli, FmLiftedIsLabelledAsBound) {
  const auto r = run_cli({"fm", "--ensemble", "octa^2", "--dps", "2", "--restarts", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = io::json::parse(r.out);
  EXPECT_EQ(j["upper"]["kind"], "upper bound (relaxation level 2)");
  EXPECT_EQ(j["ensemble"]["d_in"], 4);
}

TEST(Cli, FcDirect) {
  const auto r = run_cli({"fc", "--ensemble", "tetra", "-N", "2", "--formulation", "direct"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = io::json::parse(r.out);
  EXPECT_NEAR(j["value"].get<double>(), 0.83333, 1e-4);
  EXPECT_EQ(j["status"], "optimal");
  EXPECT_GT(j["negativity"].get<double>(), 0.01);
}

TEST(Cli, UsageErrorsExitTwo) {
  auto r = run_cli({"fm", "--ensemble", "nosuch"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("unknown builtin"), std::string::npos);
  EXPECT_EQ(lines(r.err).size(), 1u);

  EXPECT_EQ(run_cli({"fm", "--ensemble", "tetra", "--bogus"}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"fm"}).code, 2);
  EXPECT_EQ(run_cli({"fm", "--ensemble", "tetra", "--ensemble-file", "x.json"}).code, 2);
  EXPECT_EQ(run_cli({"fc", "--ensemble", "tetra", "--formulation", "magic"}).code, 2);
  EXPECT_EQ(run_cli({"fc", "--ensemble", "tetra", "--format", "csv"}).code, 2);
  EXPECT_EQ(run_cli({"fc", "--ensemble", "tetra", "-N", "9", "--formulation", "ext-full"}).code, 2);
  EXPECT_EQ(run_cli({"fm", "--ensemble-file", temp_path("missing.json")}).code, 2);
  EXPECT_EQ(run_cli({"ebc-check"}).code, 2);

  const auto bad = temp_path("bad.json");
  qcest::testing::spit(bad, R"({"label":"w","d_in":2,"d_target":2,"states":[{"p":0.5,"target":[[1,0],[0,0]]}]})");
  r = run_cli({"fm", "--ensemble-file", bad});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(lines(r.err).size(), 1u);
}

TEST(Cli, HelpExitsZero) {
  const auto r = run_cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("converge"), std::string::npos);
}

TEST(Cli, ConvergeCsv) {
  const auto r = run_cli({"converge", "--ensemble", "tetra", "--nmax", "3", "--restarts", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 4u);
  EXPECT_EQ(ls[0], "N,F_C,mode,negativity,status");
  EXPECT_EQ(ls[2].substr(0, 2), "2,");
  EXPECT_NE(ls[2].find(",ext-bose,"), std::string::npos);
  EXPECT_NEAR(std::stod(ls[2].substr(2)), 5.0 / 6, 1e-5);
}

TEST(Cli, ConvergeJsonRoundTrip) {
  const auto path = temp_path("c.json");
  const auto r = run_cli({"converge", "--ensemble", "tetra", "--nmax", "3", "--restarts", "2", "--format", "json", "--out", path});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = io::read_json_file(path);
  ConvergeOptions o;
  o.seesaw.restarts = 2;
  const auto rep = converge(make_builtin("tetra"), 3, o);
  ASSERT_EQ(j["rows"].size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(j["rows"][k]["F_C"].get<double>(), rep.rows[k].value);
    EXPECT_EQ(j["rows"][k]["negativity"].get<double>(), rep.rows[k].negativity);
  }
  EXPECT_EQ(j["fm_bounds"]["lower"].get<double>(), rep.fm_bounds.lower);
  EXPECT_EQ(j["final_gap"].get<double>(), rep.final_gap);
  EXPECT_EQ(j["monotone"].get<bool>(), rep.monotone);
}

TEST(Cli, TradeoffCsvAndNumericalLimitExit) {
  // The F_A = 1 endpoint has no strictly feasible point; it is reported with
  // its status and the run exits 3.
  const auto r = run_cli({"tradeoff", "--ensemble", "tetra", "--nb", "1", "--grid", "3"});
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 4u);
  EXPECT_EQ(ls[0], "F_A,F_B,status");
  EXPECT_EQ(ls[1].substr(0, 4), "0.5,");
  bool any_limit = false;
  for (std::size_t k = 1; k < ls.size(); ++k) any_limit |= ls[k].find("numerical-limit") != std::string::npos;
  EXPECT_EQ(r.code, any_limit ? 3 : 0);
  EXPECT_TRUE(r.code == 0 || r.code == 3);
}

TEST(Cli, ByteIdenticalReruns) {
  const auto a = temp_path("a.json");
  const auto b = temp_path("b.json");
  ASSERT_EQ(run_cli({"fm", "--ensemble", "pair:0.5", "--restarts", "3", "--seed", "9", "--out", a}).code, 0);
  ASSERT_EQ(run_cli({"fm", "--ensemble", "pair:0.5", "--restarts", "3", "--seed", "9", "--out", b}).code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  ASSERT_EQ(run_cli({"converge", "--ensemble", "equator:3", "--nmax", "4", "--restarts", "2", "--format", "json", "--out", a}).code, 0);
  ASSERT_EQ(run_cli({"converge", "--ensemble", "equator:3", "--nmax", "4", "--restarts", "2", "--format", "json", "--out", b}).code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
}

TEST(Cli, EbcCheckOnReportsAndFiles) {
  const auto report = temp_path("fc.json");
  ASSERT_EQ(run_cli({"fc", "--ensemble", "tetra", "-N", "2", "--out", report}).code, 0);
  auto r = run_cli({"ebc-check", "--choi-file", report, "--ensemble", "tetra"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = io::json::parse(r.out);
  EXPECT_FALSE(j["marginals"][0]["ppt"].get<bool>());
  EXPECT_EQ(j["marginals"][0]["verdict"], "not entanglement-breaking");
  EXPECT_NEAR(j["marginals"][0]["fidelity"].get<double>(), 5.0 / 6, 1e-5);

  const auto choi = temp_path("dep.json");
  save_choi(depolarizing_choi(2, 2), choi);
  r = run_cli({"ebc-check", "--choi-file", choi});
  ASSERT_EQ(r.code, 0) << r.err;
  j = io::json::parse(r.out);
  EXPECT_TRUE(j["marginals"][0]["ppt"].get<bool>());
  EXPECT_EQ(j["marginals"][0]["verdict"], "entanglement-breaking");

  save_choi(depolarizing_choi(4, 2), choi);
  j = io::json::parse(run_cli({"ebc-check", "--choi-file", choi}).out);
  EXPECT_EQ(j["marginals"][0]["verdict"], "PPT (separability not certified)");

  EXPECT_EQ(run_cli({"ebc-check", "--choi-file", choi, "--ensemble", "tetra"}).code, 2);
}

TEST(Cli, EnsembleFileInput) {
  const auto path = temp_path("e.json");
  save_ensemble(make_builtin("tetra"), path);
  const auto r = run_cli({"fc", "--ensemble-file", path, "-N", "2", "--formulation", "ext-bose"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(io::json::parse(r.out)["value"].get<double>(), 5.0 / 6, 1e-5);
}

TEST(Cli, UnwritableOutputIsUsageError) {
  const auto r = run_cli({"fc", "--ensemble", "tetra", "-N", "1", "--out", "/nonexistent-dir/x.json"});
  EXPECT_EQ(r.code, 2);
}
