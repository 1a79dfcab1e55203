#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "coopmon/eval.hpp"

namespace coopmon {

inline constexpr int kConfigSchemaVersion = 1;

/// Resolved run configuration. Defaults reproduce the reference setup
/// (80x40 m, 12 rooms, dt = 1 s, T = 500, M = 20, N = 5, ...).
struct RunConfig {
  ScenarioSpec scenario;
  // sweep axes; empty means "use the scenario value"
  std::vector<int> sweep_robots;
  std::vector<PlannerKind> sweep_planners;
  std::vector<Task> sweep_tasks;
  std::vector<OodVariant> sweep_variants;
  int hybrid_budget = 5;
  std::vector<HybridSplit> hybrid_splits{{5, 0}, {4, 1}, {3, 2}, {2, 3}, {1, 4}, {0, 5}};
  PlannerKind hybrid_planner = PlannerKind::WS;
  int placements = 7;
  std::string output_dir = "out";
  std::string marl_json;  // learner hyperparameters, passed through untouched
};

RunConfig default_config();

/// Full resolved configuration as JSON text (every key present).
std::string config_to_string(const RunConfig& config);

/// Strict parse: keys missing from the text keep their defaults, unknown keys
/// and wrongly typed values throw ConfigError naming the key path.
RunConfig config_from_string(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Sets one dotted key (e.g. "env.horizon") from a JSON literal; bare words
/// are taken as strings. Throws ConfigError for unknown keys or bad values.
void apply_override(RunConfig& config, const std::string& key_path, const std::string& value);

/// Applies several overrides, then validates once, so coupled keys (e.g. the
/// hybrid budget and its splits) can change together.
void apply_overrides(RunConfig& config,
                     const std::vector<std::pair<std::string, std::string>>& overrides);

/// Grid of scenarios spanned by the sweep axes (planners x robots x tasks x variants).
std::vector<ScenarioSpec> sweep_grid(const RunConfig& config);

}  // namespace coopmon
