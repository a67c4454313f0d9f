#include <gtest/gtest.h>
#include <sys/wait.h>

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <vector>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliRun {
  int code = -1;
  std::string output;
};

CliRun bilens(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / ("bilens_cli_" + std::to_string(::getpid()) + ".log");
  const std::string cmd = std::string(BILENS_EXE) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  fs::remove(log);
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("bilens_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string out(const std::string& sub = "run") const { return (dir_ / sub).string(); }
  fs::path dir_;
};

TEST_F(Cli, SolveWritesFilesAndSummary) {
  const CliRun r = bilens("solve --scenario iaf_case2 --q 4 --grid 500 --out " + out());
  ASSERT_EQ(r.code, 0) << r.output;
  const fs::path d = out();
  for (const char* f : {"control.csv", "convergence.csv", "summary.json", "state_1.csv", "state_4.csv"}) {
    EXPECT_TRUE(fs::exists(d / f)) << f;
  }
  EXPECT_FALSE(fs::exists(d / "state_5.csv"));
  const std::string control = slurp(d / "control.csv");
  EXPECT_EQ(control.substr(0, control.find('\n')), "t,u1");
  EXPECT_EQ(std::count(control.begin(), control.end(), '\n'), 502);
  EXPECT_EQ(slurp(d / "state_2.csv").substr(0, 5), "t,x1\n");
  EXPECT_EQ(slurp(d / "convergence.csv").substr(0, 32), "k,diff_x,cost,criterion_sum,rho\n");

  const json s = json::parse(slurp(d / "summary.json"));
  for (const char* key : {"config", "converged", "iterations", "cost", "J1", "hjb_residual",
                          "necessary_condition_residual", "metrics", "notes"}) {
    EXPECT_TRUE(s.contains(key)) << key;
  }
  for (const char* key : {"source", "scenario", "problem", "grid", "max_iters", "tol", "stop_rule", "alpha", "q",
                          "diagnostics", "mc_paths", "seed", "out"}) {
    EXPECT_TRUE(s["config"].contains(key)) << key;
  }
  EXPECT_TRUE(s["converged"].get<bool>());
  EXPECT_EQ(s["config"]["grid"], 500);
  EXPECT_EQ(s["config"]["q"], 4);
  EXPECT_TRUE(s["metrics"].contains("terminal_mean"));
  EXPECT_TRUE(s["hjb_residual"].contains("relative"));
  bool r_note = false;
  for (const auto& n : s["notes"]) r_note |= n.get<std::string>().find("R=3") != std::string::npos;
  EXPECT_TRUE(r_note);
}

TEST_F(Cli, MaxItersExitCode) {
  const CliRun r = bilens("solve --scenario iaf_case1 --max-iters 1 --grid 400 --out " + out());
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_FALSE(json::parse(slurp(fs::path(out()) / "summary.json"))["converged"].get<bool>());
}

TEST_F(Cli, ErrorsExitOne) {
  fs::create_directories(dir_);
  std::ofstream(dir_ / "bad.json") << "{\n \"n\": 1,\n \"m\": 1,\n \"A\" [[0]]\n}\n";
  CliRun r = bilens("solve --problem " + (dir_ / "bad.json").string() + " --out " + out());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("line 4"), std::string::npos) << r.output;

  std::ofstream(dir_ / "field.json") << R"({"n": 1, "m": 1, "A": [[0]], "B": [[1]], "Blist": [[[0]]],
    "g": [0], "x0": [0], "xd": [1, 2], "tf": 1, "R": [[1]]})";
  r = bilens("solve --problem " + (dir_ / "field.json").string() + " --out " + out());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("field 'xd'"), std::string::npos) << r.output;

  r = bilens("solve --scenario twospin_coherence --grid 500 --out " + out());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("Riccati escape at t="), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("try increasing R"), std::string::npos);

  EXPECT_EQ(bilens("solve --out " + out()).code, 1);
  EXPECT_EQ(bilens("solve --scenario iaf_case1 --problem x.json").code, 1);
  EXPECT_EQ(bilens("solve --scenario nope").code, 1);
}

TEST_F(Cli, ProblemFileRun) {
  const CliRun r = bilens("solve --problem " + std::string(BILENS_DATA_DIR) + "/two_members.json --grid 400 --out " + out());
  ASSERT_EQ(r.code, 0) << r.output;
  const json s = json::parse(slurp(fs::path(out()) / "summary.json"));
  EXPECT_EQ(s["scenario"], "file_ensemble");
  EXPECT_TRUE(fs::exists(fs::path(out()) / "state_2.csv"));
}

TEST_F(Cli, DeterministicCsv) {
  ASSERT_EQ(bilens("solve --scenario iaf_case2 --q 3 --grid 300 --out " + out("a")).code, 0);
  ASSERT_EQ(bilens("solve --scenario iaf_case2 --q 3 --grid 300 --out " + out("b")).code, 0);
  for (const char* f : {"control.csv", "state_1.csv", "state_3.csv", "convergence.csv"}) {
    EXPECT_EQ(slurp(fs::path(out("a")) / f), slurp(fs::path(out("b")) / f)) << f;
  }
  ASSERT_EQ(bilens("validate --out " + out("a") + " --mc-paths 200 --seed 3").code, 0);
  ASSERT_EQ(bilens("validate --out " + out("b") + " --mc-paths 200 --seed 3").code, 0);
  EXPECT_EQ(slurp(fs::path(out("a")) / "validate.json").size(), slurp(fs::path(out("b")) / "validate.json").size());
}

TEST_F(Cli, ValidateReportsAndGates) {
  ASSERT_EQ(bilens("solve --scenario iaf_case1 --q 3 --grid 400 --out " + out()).code, 0);
  CliRun r = bilens("validate --out " + out() + " --mc-paths 1");
  EXPECT_EQ(r.code, 0) << r.output;
  json v = json::parse(slurp(fs::path(out()) / "validate.json"));
  EXPECT_FALSE(v["monte_carlo"]["gated"].get<bool>());
  EXPECT_LT(v["fixed_point"]["sup_error"].get<double>(), 1e-4);
  EXPECT_EQ(v["terminal_error"].size(), 3u);

  r = bilens("validate --out " + out() + " --mc-paths 400 --seed 1");
  EXPECT_EQ(r.code, 0) << r.output;
  v = json::parse(slurp(fs::path(out()) / "validate.json"));
  EXPECT_TRUE(v["monte_carlo"]["gated"].get<bool>());
  EXPECT_LT(v["monte_carlo"]["max_standardized_deviation"].get<double>(), 4.0);

  // A tampered control no longer reproduces the stored states.
  std::istringstream rows(slurp(fs::path(out()) / "control.csv"));
  std::vector<std::string> lines;
  for (std::string line; std::getline(rows, line);) lines.push_back(line);
  std::ofstream tampered(fs::path(out()) / "control.csv");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& l = lines[i];
    tampered << (i > lines.size() / 2 ? l.substr(0, l.find(',')) + ",5" : l) << '\n';
  }
  tampered.close();
  EXPECT_EQ(bilens("validate --out " + out()).code, 2);
}

TEST_F(Cli, ValidateWithoutControlFails) {
  const CliRun r = bilens("validate --scenario iaf_case1 --out " + out("missing"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("control.csv"), std::string::npos);
}

TEST_F(Cli, SweepTable) {
  const CliRun r = bilens("sweep --scenario iaf_case1 --q 3 --grid 400 --scales 5,1000 --out " + out());
  ASSERT_EQ(r.code, 0) << r.output;
  std::ifstream in(fs::path(out()) / "sweep.csv");
  std::string header, row5, row1000;
  std::getline(in, header);
  std::getline(in, row5);
  std::getline(in, row1000);
  EXPECT_EQ(header, "scale,status,converged,iterations,crossover,cost,terminal_error");
  EXPECT_EQ(row5.substr(0, 12), "5,converged,");
  EXPECT_EQ(row1000.substr(0, 15), "1000,converged,");
  const double e5 = std::stod(row5.substr(row5.rfind(',') + 1));
  const double e1000 = std::stod(row1000.substr(row1000.rfind(',') + 1));
  EXPECT_GT(e1000, e5);

  const CliRun spin = bilens("sweep --scenario twospin_coherence --grid 500 --scales 1,1.8 --out " + out("spin"));
  EXPECT_EQ(spin.code, 0);
  EXPECT_NE(slurp(fs::path(out("spin")) / "sweep.csv").find("diverged"), std::string::npos);
}

TEST_F(Cli, SweepRejectsEmptyScaleList) {
  EXPECT_EQ(bilens("sweep --scenario iaf_case1 --out " + out()).code, 1);
}

TEST_F(Cli, OutputRootFromEnvironment) {
  fs::create_directories(dir_);
  const std::string env = "BILENS_OUTPUT_ROOT=" + dir_.string() + " ";
  const std::string cmd = env + BILENS_EXE + " solve --scenario iaf_case2 --q 2 --grid 300 > /dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "iaf_case2" / "summary.json"));
}

}  // namespace
