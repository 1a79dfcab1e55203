#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "coopmon/grid_world.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = coopmon::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "coopmon_cli_tests" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

int line_count(const std::string& text) {
  return static_cast<int>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST(Cli, GenMapIsByteIdentical) {
  const fs::path d = fresh_dir("genmap");
  ASSERT_EQ(cli({"gen-map", "--seed", "7", "-o", (d / "a.json").string()}).code, 0);
  ASSERT_EQ(cli({"gen-map", "--seed", "7", "-o", (d / "b.json").string()}).code, 0);
  EXPECT_EQ(slurp(d / "a.json"), slurp(d / "b.json"));
  EXPECT_FALSE(slurp(d / "a.json").empty());
  EXPECT_EQ(coopmon::load_map(d / "a.json"), coopmon::generate_map(7));
  EXPECT_TRUE(fs::exists(d / "a.json.manifest.json"));
}

TEST(Cli, SimulateWritesRowRecordAndManifest) {
  const fs::path d = fresh_dir("simulate");
  const std::vector<std::string> args{"simulate", "--planner", "ws", "--task", "tracking",
                                      "--episodes", "1", "--seed", "1", "--set", "env.horizon=40"};
  auto a = args;
  a.insert(a.end(), {"-o", (d / "a").string()});
  auto b = args;
  b.insert(b.end(), {"-o", (d / "b").string()});
  const Outcome ra = cli(a);
  ASSERT_EQ(ra.code, 0) << ra.err;
  ASSERT_EQ(cli(b).code, 0);
  EXPECT_EQ(line_count(slurp(d / "a" / "episodes.csv")), 2);  // header + one row
  ASSERT_TRUE(fs::exists(d / "a" / "episode_0000.json"));
  EXPECT_EQ(slurp(d / "a" / "episode_0000.json"), slurp(d / "b" / "episode_0000.json"));
  EXPECT_EQ(slurp(d / "a" / "episodes.csv"), slurp(d / "b" / "episodes.csv"));
  const json m = json::parse(slurp(d / "a" / "manifest.json"));
  EXPECT_EQ(m["command"], "simulate");
  EXPECT_EQ(m["config"]["env"]["horizon"], 40);
  EXPECT_EQ(m["config"]["planner"]["kind"], "ws");
}

TEST(Cli, ConfigFileAndOverrides) {
  const fs::path d = fresh_dir("configfile");
  std::ofstream(d / "cfg.json") << R"({"schema_version": 1, "env": {"horizon": 25}, "crowd": {"humans": 4}})";
  const Outcome r = cli({"simulate", "-c", (d / "cfg.json").string(), "--episodes", "1", "--no-records",
                     "--set", "env.robots=2", "-o", (d / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json m = json::parse(slurp(d / "out" / "manifest.json"));
  EXPECT_EQ(m["config"]["env"]["horizon"], 25);
  EXPECT_EQ(m["config"]["crowd"]["humans"], 4);
  EXPECT_EQ(m["config"]["env"]["robots"], 2);
  EXPECT_FALSE(fs::exists(d / "out" / "episode_0000.json"));
}

TEST(Cli, ExitCodes) {
  const fs::path d = fresh_dir("codes");
  Outcome r = cli({"simulate", "--set", "env.bogus=1", "-o", d.string()});
  EXPECT_EQ(r.code, coopmon::cli::kConfig);
  EXPECT_NE(r.err.find("env.bogus"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("config"), std::string::npos);
  EXPECT_EQ(cli({"simulate", "--planner", "teleport"}).code, coopmon::cli::kConfig);
  EXPECT_EQ(cli({"frobnicate"}).code, coopmon::cli::kConfig);
  EXPECT_EQ(cli({}).code, coopmon::cli::kConfig);

  r = cli({"gen-map", "--set", "map.rooms=400", "--set", "map.max_placements=50", "-o", (d / "m.json").string()});
  EXPECT_EQ(r.code, coopmon::cli::kGeneration) << r.err;

  r = cli({"serve-bridge", "--tcp", "--host", "not-an-address"});
  EXPECT_EQ(r.code, coopmon::cli::kBridge) << r.err;
  EXPECT_NE(r.err.find("bridge"), std::string::npos);

  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, SweepAggregateRows) {
  const fs::path d = fresh_dir("sweep");
  const Outcome r = cli({"sweep", "--robots", "1,2", "--planners", "ws,mcpp", "--episodes", "2", "--set",
                     "env.horizon=30", "-o", d.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(line_count(slurp(d / "aggregate.csv")), 1 + 4);
  EXPECT_EQ(line_count(slurp(d / "results.csv")), 1 + 8);
  const json s = json::parse(slurp(d / "summary.json"));
  EXPECT_EQ(s["aggregates"].size(), 4u);
  EXPECT_TRUE(s["marginal_utility"].contains("ws tracking default"));
  // Delta(2) = E(1) - E(2) from the stored means.
  double e1 = 0, e2 = 0;
  for (const auto& a : s["aggregates"]) {
    if (a["planner"] != "ws") continue;
    (a["n_robots"] == 1 ? e1 : e2) = a["mean"].get<double>();
  }
  EXPECT_DOUBLE_EQ(s["marginal_utility"]["ws tracking default"]["2"].get<double>(), e1 - e2);
}

TEST(Cli, HybridSweep) {
  const fs::path d = fresh_dir("hybrid");
  const Outcome r = cli({"sweep", "--hybrid", "--episodes", "1", "--set", "env.horizon=20", "--set",
                     "experiment.hybrid_budget=2", "--set", "experiment.hybrid_splits=[[2,0],[1,1],[0,2]]",
                     "-o", d.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(line_count(slurp(d / "aggregate.csv")), 1 + 3);
  EXPECT_NE(r.out.find("F1+M1"), std::string::npos);
}

TEST(Cli, PlacementHeatmapCorrelate) {
  const fs::path d = fresh_dir("studies");
  Outcome r = cli({"placement", "--episodes", "1", "--set", "env.horizon=20", "--set", "experiment.placements=2",
               "-o", (d / "p").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(slurp(d / "p" / "placements.json"))["candidates"].size(), 2u);

  r = cli({"heatmap", "--episodes", "1", "--fixed", "1", "--set", "env.horizon=20", "-o", (d / "h").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string ppm = slurp(d / "h" / "heatmap.ppm");
  EXPECT_EQ(ppm.substr(0, 2), "P6");
  EXPECT_EQ(json::parse(slurp(d / "h" / "heatmap.json"))["format"], "coopmon-heatmap");

  r = cli({"correlate", "--episodes", "4", "--set", "env.horizon=30", "-o", (d / "c").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json c = json::parse(slurp(d / "c" / "correlation.json"));
  EXPECT_TRUE(c.contains("r"));
}
