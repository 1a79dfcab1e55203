#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>

#include <nlohmann/json.hpp>

#include "coopmon/config.hpp"
#include "coopmon/errors.hpp"

using namespace coopmon;
using nlohmann::json;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, DefaultsMatchPublishedSettings) {
  const RunConfig c = default_config();
  const ScenarioSpec& s = c.scenario;
  EXPECT_DOUBLE_EQ(s.map_params.width_m, 80.0);
  EXPECT_DOUBLE_EQ(s.map_params.height_m, 40.0);
  EXPECT_EQ(s.map_params.n_rooms, 12);
  EXPECT_DOUBLE_EQ(s.env.dt, 1.0);
  EXPECT_EQ(s.env.horizon, 500);
  EXPECT_EQ(s.crowd.m, 20);
  EXPECT_EQ(s.n_robots, 5);
  EXPECT_DOUBLE_EQ(s.env.noise.sigma_p, 0.2);
  EXPECT_DOUBLE_EQ(s.env.noise.sigma_theta, 0.1);
  EXPECT_EQ(s.env.actions.v, (std::array<double, 3>{0, 1, 2}));
  EXPECT_DOUBLE_EQ(s.env.actions.delta[0], -kPi / 8);
  EXPECT_DOUBLE_EQ(s.env.actions.delta[1], 0.0);
  EXPECT_DOUBLE_EQ(s.env.actions.delta[2], kPi / 8);
  EXPECT_DOUBLE_EQ(s.env.v_max, 2.0);
  EXPECT_DOUBLE_EQ(s.env.tracking.range_m, 10.0);
  EXPECT_DOUBLE_EQ(s.env.tracking.fov_rad, kPi / 2);
  EXPECT_EQ(s.env.tracking.k_samples, 5);
  EXPECT_DOUBLE_EQ(s.env.lidar.range_m, 10.0);
  EXPECT_DOUBLE_EQ(s.env.lidar.fov_rad, 2 * kPi);
  EXPECT_EQ(s.env.lidar.beams, 16);

  const json marl = json::parse(c.marl_json);
  EXPECT_EQ(marl["hidden_dim"], 64);
  EXPECT_DOUBLE_EQ(marl["lr_actor"].get<double>(), 3e-4);
  EXPECT_DOUBLE_EQ(marl["lr_critic"].get<double>(), 3e-4);
  EXPECT_DOUBLE_EQ(marl["clip"].get<double>(), 0.2);
  EXPECT_DOUBLE_EQ(marl["max_grad_norm"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(marl["value_coef"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(marl["gamma"].get<double>(), 0.99);
  EXPECT_DOUBLE_EQ(marl["gae_lambda"].get<double>(), 0.95);
  EXPECT_DOUBLE_EQ(marl["entropy_speed"].get<double>(), 0.01);
  EXPECT_DOUBLE_EQ(marl["entropy_rotation"].get<double>(), 0.001);
  EXPECT_EQ(marl["parallel_envs"], 250);
  EXPECT_EQ(marl["rollout_steps"], 1000);
  EXPECT_EQ(marl["minibatches"], 20);
  EXPECT_EQ(marl["epochs"], 20);
  EXPECT_EQ(marl["chunk_length"], 50);
  EXPECT_EQ(marl["total_timesteps"], 50000000);
}

TEST(Config, RoundTripIsStable) {
  const std::string text = config_to_string(default_config());
  EXPECT_EQ(config_to_string(config_from_string(text)), text);
  const json j = json::parse(text);
  EXPECT_EQ(j["schema_version"], kConfigSchemaVersion);
  for (const char* section : {"map", "crowd", "env", "sensors", "planner", "experiment", "marl"})
    EXPECT_TRUE(j.contains(section)) << section;
}

TEST(Config, PartialFileKeepsDefaults) {
  const RunConfig c = config_from_string(R"({"schema_version": 1, "env": {"horizon": 42}})");
  EXPECT_EQ(c.scenario.env.horizon, 42);
  EXPECT_EQ(c.scenario.crowd.m, 20);
}

TEST(Config, UnknownKeysNamePath) {
  EXPECT_EQ(error_of([] { config_from_string(R"({"schema_version": 1, "env": {"bogus": 1}})"); }),
            "ConfigError: env.bogus: unknown key");
  EXPECT_EQ(error_of([] { config_from_string(R"({"schema_version": 1, "extra": {}})"); }),
            "ConfigError: extra: unknown key");
}

TEST(Config, TypeAndRangeErrorsNamePath) {
  EXPECT_NE(error_of([] { config_from_string(R"({"schema_version": 1, "env": {"horizon": "x"}})"); })
                .find("env.horizon"),
            std::string::npos);
  EXPECT_NE(error_of([] { config_from_string(R"({"schema_version": 1, "env": {"dt": -1}})"); })
                .find("env.dt"),
            std::string::npos);
  EXPECT_NE(error_of([] { config_from_string(R"({"schema_version": 1, "map": {"room_size_min_m": 30}})"); })
                .find("room_size"),
            std::string::npos);
}

TEST(Config, SchemaVersionRequired) {
  EXPECT_NE(error_of([] { config_from_string(R"({"env": {}})"); }).find("schema_version"), std::string::npos);
  EXPECT_NE(error_of([] { config_from_string(R"({"schema_version": 99})"); }).find("schema_version"),
            std::string::npos);
  EXPECT_THROW(config_from_string("not json"), ConfigError);
}

TEST(Config, LoadFromFile) {
  const auto dir = std::filesystem::temp_directory_path() / "coopmon_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / "cfg.json";
  std::ofstream(path) << R"({"schema_version": 1, "crowd": {"humans": 7}})";
  EXPECT_EQ(load_config(path).scenario.crowd.m, 7);
  EXPECT_THROW(load_config(dir / "missing.json"), IoError);
}

TEST(Config, Overrides) {
  RunConfig c = default_config();
  apply_override(c, "env.horizon", "120");
  EXPECT_EQ(c.scenario.env.horizon, 120);
  apply_override(c, "planner.kind", "mcpp");
  EXPECT_EQ(c.scenario.planner.kind, PlannerKind::MCPP);
  apply_override(c, "experiment.task", "\"occupancy\"");
  EXPECT_EQ(c.scenario.env.task, Task::Occupancy);
  apply_override(c, "sensors.tracking.fov_deg", "60");
  EXPECT_NEAR(c.scenario.env.tracking.fov_rad, kPi / 3, 1e-12);
  EXPECT_EQ(error_of([&] { apply_override(c, "env.nope", "1"); }), "ConfigError: env.nope: unknown key");
  EXPECT_THROW(apply_override(c, "planner.kind", "teleport"), ConfigError);
  EXPECT_EQ(c.scenario.planner.kind, PlannerKind::MCPP);  // failed override leaves value
}

TEST(Config, SweepGridSpansAxes) {
  RunConfig c = default_config();
  EXPECT_EQ(sweep_grid(c).size(), 1u);
  c.sweep_robots = {3, 4, 5};
  c.sweep_planners = {PlannerKind::FC, PlannerKind::WS, PlannerKind::MCPP, PlannerKind::PM};
  const auto grid = sweep_grid(c);
  ASSERT_EQ(grid.size(), 12u);
  std::set<std::pair<int, int>> seen;
  for (const auto& s : grid) seen.insert({static_cast<int>(s.planner.kind), s.n_robots});
  EXPECT_EQ(seen.size(), 12u);
  c.sweep_tasks = {Task::Tracking, Task::Flow};
  c.sweep_variants = {OodVariant::Sparse};
  EXPECT_EQ(sweep_grid(c).size(), 24u);
  for (const auto& s : sweep_grid(c)) EXPECT_EQ(s.variant, OodVariant::Sparse);
}

TEST(Config, HybridSplitsValidated) {
  EXPECT_THROW(config_from_string(
                   R"({"schema_version": 1, "experiment": {"hybrid_budget": 5, "hybrid_splits": [[2, 2]]}})"),
               ConfigError);
  const RunConfig c = config_from_string(
      R"({"schema_version": 1, "experiment": {"hybrid_budget": 3, "hybrid_splits": [[3, 0], [1, 2]]}})");
  ASSERT_EQ(c.hybrid_splits.size(), 2u);
  EXPECT_EQ(c.hybrid_splits[1].n_mobile, 2);
}

TEST(Config, CoupledOverridesValidateTogether) {
  RunConfig c = default_config();
  EXPECT_THROW(apply_override(c, "experiment.hybrid_budget", "2"), ConfigError);
  apply_overrides(c, {{"experiment.hybrid_budget", "2"}, {"experiment.hybrid_splits", "[[2,0],[0,2]]"}});
  EXPECT_EQ(c.hybrid_budget, 2);
  EXPECT_EQ(c.hybrid_splits.size(), 2u);
}
