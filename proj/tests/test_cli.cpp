#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dtf/heightmap.hpp"
#include "fixtures.hpp"

namespace dtf {
namespace {

namespace fs = std::filesystem;
using testing::source_path;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("dtf_cli_") + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  /// Runs the CLI, returning its exit code; stdout goes to `last_stdout_`.
  int run(const std::string& args) {
    const fs::path out = dir_ / "stdout.txt";
    const std::string cmd = std::string(DTF_CLI_PATH) + " " + args + " > " + out.string() + " 2> " +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    last_stdout_ = read(out);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path write_scenario(const std::string& name, const nlohmann::json& j) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << j.dump();
    fs::copy_file(source_path("scenarios/hyq.json"), dir_ / "hyq.json", fs::copy_options::overwrite_existing);
    return p;
  }

  fs::path dir_;
  std::string last_stdout_;
};

std::string scenario(const std::string& name) { return source_path("scenarios/" + name); }

std::vector<std::vector<double>> read_csv(const fs::path& p, std::vector<std::string>& header) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::stringstream hs(line);
  for (std::string h; std::getline(hs, h, ',');) header.push_back(h);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::stringstream ls(line);
    std::vector<double> row;
    for (std::string f; std::getline(ls, f, ',');) row.push_back(std::stod(f));
    rows.push_back(std::move(row));
  }
  return rows;
}

TEST_F(Cli, PlanWritesOutputsPerFormulation) {
  ASSERT_EQ(run("plan --scenario " + scenario("stairs.json") + " --out " + (dir_ / "o").string()), 0);
  for (const char* f : {"convex_trajectory.csv", "convex_knots.csv", "convex_result.json", "nonlinear_trajectory.csv",
                        "nonlinear_knots.csv", "nonlinear_result.json", "report.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "o" / f)) << f;
  }
  const auto report = nlohmann::json::parse(read(dir_ / "o" / "report.json"));
  ASSERT_EQ(report.size(), 2u);
  EXPECT_EQ(report[0]["formulation"], "convex");
  EXPECT_EQ(report[1]["formulation"], "nonlinear");
  for (const auto& r : report) {
    EXPECT_EQ(r["status"], "Feasible");
    EXPECT_GT(r["solve_seconds"].get<double>(), 0.0);
  }
  EXPECT_NE(last_stdout_.find("convex: Feasible"), std::string::npos);
}

TEST_F(Cli, ConvexOutputsAreByteIdenticalAcrossRuns) {
  const std::string base = "plan --formulation convex --scenario " + scenario("flat.json") + " --out ";
  ASSERT_EQ(run(base + (dir_ / "a").string()), 0);
  ASSERT_EQ(run(base + (dir_ / "b").string()), 0);
  for (const char* f : {"convex_trajectory.csv", "convex_knots.csv", "convex_result.json"}) {
    const std::string a = read(dir_ / "a" / f);
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, read(dir_ / "b" / f)) << f;
  }
}

TEST_F(Cli, ReportIntegralsFollowFromEmittedSamples) {
  ASSERT_EQ(run("plan --scenario " + scenario("stairs.json") + " --out " + dir_.string()), 0);
  const auto report = nlohmann::json::parse(read(dir_ / "report.json"));
  for (const auto& r : report) {
    const std::string name = r["formulation"];
    std::vector<std::string> header;
    const auto rows = read_csv(dir_ / (name + "_trajectory.csv"), header);
    ASSERT_GT(rows.size(), 10u);
    const auto col = [&](const std::string& h) {
      return static_cast<std::size_t>(std::find(header.begin(), header.end(), h) - header.begin());
    };
    const std::size_t t = col("t"), ax = col("ax"), pr = col("pitch_rate");
    double integral = 0.0, peak_pitch = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      peak_pitch = std::max(peak_pitch, std::abs(rows[i][pr]));
      if (i == 0) continue;
      auto sq = [&](const std::vector<double>& row) {
        return row[ax] * row[ax] + row[ax + 1] * row[ax + 1] + row[ax + 2] * row[ax + 2];
      };
      integral += 0.5 * (rows[i][t] - rows[i - 1][t]) * (sq(rows[i]) + sq(rows[i - 1]));
    }
    EXPECT_NEAR(integral, r["acceleration_integral"].get<double>(), 1e-9) << name;
    EXPECT_NEAR(peak_pitch, r["peak_rate"][1].get<double>(), 1e-12) << name;
  }
}

TEST_F(Cli, CheckAcceptsPlannedResultAndRejectsTamperedForces) {
  ASSERT_EQ(run("plan --formulation nonlinear --scenario " + scenario("stairs.json") + " --out " + dir_.string()), 0);
  const fs::path result = dir_ / "nonlinear_result.json";
  EXPECT_EQ(run("check --scenario " + scenario("stairs.json") + " --result " + result.string()), 0);
  EXPECT_EQ(last_stdout_.rfind("OK", 0), 0u);

  auto j = nlohmann::json::parse(read(result));
  j["knots"][3]["forces"][2] = j["knots"][3]["forces"][2].get<double>() + 5.0;
  const fs::path bad = dir_ / "tampered.json";
  std::ofstream(bad) << j.dump();
  EXPECT_EQ(run("check --scenario " + scenario("stairs.json") + " --result " + bad.string()), 1);
  EXPECT_EQ(last_stdout_.rfind("VIOLATED", 0), 0u);
}

TEST_F(Cli, CheckRejectsMalformedResult) {
  std::ofstream(dir_ / "junk.json") << "{ not json";
  EXPECT_EQ(run("check --scenario " + scenario("flat.json") + " --result " + (dir_ / "junk.json").string()), 2);
  std::ofstream(dir_ / "partial.json") << R"({"status": "Feasible"})";
  EXPECT_EQ(run("check --scenario " + scenario("flat.json") + " --result " + (dir_ / "partial.json").string()), 2);
}

TEST_F(Cli, MissingTerrainFileIsParseError) {
  const auto p = write_scenario("s.json", {{"robot", "hyq.json"}, {"terrain", {{"type", "file"}, {"path", "gone.txt"}}}});
  EXPECT_EQ(run("plan --scenario " + p.string() + " --out " + dir_.string()), 2);
  EXPECT_NE(read(dir_ / "stderr.txt").find("gone.txt"), std::string::npos);
}

TEST_F(Cli, TerrainFileFromGenTerrainIsUsable) {
  const fs::path map = dir_ / "steps.txt";
  ASSERT_EQ(run("gen-terrain --step-height 0.06 --steps 1 --out " + map.string()), 0);
  const HeightMap m = load_heightmap(map);
  EXPECT_DOUBLE_EQ(m.height(0.7, 0.0), 0.06);
  const auto p = write_scenario(
      "s.json", {{"robot", "hyq.json"}, {"terrain", {{"type", "file"}, {"path", "steps.txt"}}},
                 {"command", {{"vx", 0.1}}}, {"horizon_switches", 4}, {"formulation", "convex"}});
  EXPECT_EQ(run("plan --scenario " + p.string() + " --out " + dir_.string()), 0);
}

TEST_F(Cli, GenTerrainFromScenarioMatchesGenerator) {
  ASSERT_EQ(run("gen-terrain --scenario " + scenario("stairs.json")), 0);
  std::istringstream in(last_stdout_);
  const HeightMap m = parse_heightmap(in, "stdout");
  EXPECT_EQ(m.heights(), generate_stairs(StairParams{}).heights());
  EXPECT_EQ(run("gen-terrain --scenario " + scenario("flat.json")), 2);
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("footmap --scenario " + scenario("stairs.json") + " --leg XX"), 2);
  EXPECT_EQ(run("footmap --scenario " + scenario("stairs.json") + " --leg RF --formulation both"), 2);
  EXPECT_EQ(run("plan --scenario " + scenario("flat.json") + " --formulation fancy"), 2);
  EXPECT_EQ(run("plan"), 2);
  EXPECT_EQ(run("fly"), 2);
  EXPECT_EQ(run("plan --scenario /nonexistent.json"), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, FootmapWritesMapAndCounts) {
  ASSERT_EQ(run("footmap --formulation convex --leg RF --jobs 2 --scenario " + scenario("stairs.json") + " --out " +
                dir_.string()),
            0);
  std::vector<std::string> header;
  const std::string csv = read(dir_ / "footmap_RF.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 82);
  EXPECT_NE(last_stdout_.find("total 81"), std::string::npos);
  EXPECT_NE(last_stdout_.find("geometric_ok"), std::string::npos);
  EXPECT_NE(last_stdout_.find("dynamic_ok"), std::string::npos);
}

TEST_F(Cli, InfeasiblePlanExitsOne) {
  // Four feet capped at 100 N cannot carry 90 kg.
  const auto p = write_scenario("s.json", {{"robot", {{"mass", 90.0}, {"f_max", 100.0}}},
                                           {"command", {{"vx", 0.1}}},
                                           {"horizon_switches", 2}});
  EXPECT_EQ(run("plan --scenario " + p.string() + " --out " + dir_.string()), 1);
  EXPECT_TRUE(fs::exists(dir_ / "nonlinear_result.json"));
  EXPECT_FALSE(fs::exists(dir_ / "nonlinear_trajectory.csv"));
  const auto report = nlohmann::json::parse(read(dir_ / "report.json"));
  for (const auto& r : report) EXPECT_EQ(r["status"], "Infeasible");
  EXPECT_EQ(run("check --scenario " + p.string() + " --result " + (dir_ / "convex_result.json").string()), 1);
}

}  // namespace
}  // namespace dtf
