#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coopmon/env.hpp"
#include "coopmon/planners.hpp"

namespace coopmon {

enum class OodVariant { Default, Sparse, Crowded, LongDwell, Skewed };
const char* variant_name(OodVariant v);
OodVariant parse_variant(const std::string& name);

struct ScenarioSpec {
  std::uint64_t map_seed = kReferenceMapSeed;
  std::optional<std::filesystem::path> map_file;
  MapParams map_params;
  bool regenerate_map = false;  // fresh map per episode instead of one fixed map
  CrowdParams crowd;
  OodVariant variant = OodVariant::Default;
  double skew_multiplier = 2.0;
  int n_robots = 5;
  int n_fixed_cams = 0;
  std::optional<std::vector<SensorPose>> camera_poses;  // overrides fc_place
  PlannerOptions planner;
  EnvParams env;
  int episodes = 50;
  std::uint64_t base_seed = 1;
  std::optional<std::uint64_t> crowd_seed;  // one crowd for every episode when set
  std::string label;
};

/// Zone whose anchor room centroid has the largest mean shortest-path
/// distance to the other zones' anchors.
int isolated_zone(const GridWorld& world);

/// Crowd parameters of the variant: m = 10/30 for Sparse/Crowded, dwell
/// mu = ln 90 for LongDwell, skew toward the isolated zone for Skewed.
CrowdParams apply_variant(const GridWorld& world, CrowdParams base, OodVariant variant,
                          double skew_multiplier = 2.0);

std::uint64_t episode_seed(std::uint64_t base_seed, int episode);

/// Stable hex digest of the resolved scenario, used to key CSV rows.
std::string config_hash(const ScenarioSpec& spec);

/// Everything needed to run one episode of a scenario.
struct PreparedEpisode {
  std::shared_ptr<const GridWorld> world;
  std::shared_ptr<const std::vector<HumanPlan>> crowd;
  EnvParams env;
  PlannerOptions planner;
  std::uint64_t seed = 0;
};

/// FC scenarios turn the robot budget into cameras (no robots move); other
/// planners keep n_robots mobile robots plus n_fixed_cams cameras.
PreparedEpisode prepare_episode(const ScenarioSpec& spec, int episode,
                                std::shared_ptr<const GridWorld> fixed_world = nullptr);

/// Same as prepare_episode with the episode seed given directly.
PreparedEpisode prepare_seeded(const ScenarioSpec& spec, std::uint64_t seed,
                               std::shared_ptr<const GridWorld> fixed_world = nullptr);

EpisodeRecord run_scenario_episode(const ScenarioSpec& spec, int episode,
                                   std::shared_ptr<const GridWorld> fixed_world = nullptr);

std::shared_ptr<const GridWorld> scenario_world(const ScenarioSpec& spec);

struct EpisodeRow {
  std::size_t config = 0;
  int episode = 0;
  std::uint64_t seed = 0;
  Task task = Task::Tracking;
  double metric = 0.0;  // error of the scenario task
  double reward = 0.0;  // undiscounted episode reward of the scenario task
  EpisodeMetrics metrics;
};

struct Aggregate {
  std::size_t config = 0;
  int count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
  double ci95 = 0.0;    // half width of the t interval of the mean
  double reward_mean = 0.0;
  double reward_stddev = 0.0;
};

struct SweepResult {
  std::vector<ScenarioSpec> configs;
  std::vector<std::string> hashes;
  std::vector<EpisodeRow> rows;  // config-major, then episode
  std::vector<Aggregate> aggregates;
};

/// Worker count: COOPMON_THREADS when set, otherwise hardware concurrency.
unsigned worker_count();

/// Runs body(i) for i in [0, n) on up to `workers` threads. The first
/// exception thrown is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body);

using RecordSink = std::function<void(std::size_t config, int episode, const EpisodeRecord&)>;

/// Runs every (config, episode). Rows are stored by index so results do not
/// depend on scheduling. The sink, if any, is called under a lock.
SweepResult run_sweep(const std::vector<ScenarioSpec>& grid, unsigned workers = 0,
                      const RecordSink& sink = nullptr);

Aggregate aggregate(std::span<const double> metric, std::span<const double> reward);

/// Delta(n) = E(n-1) - E(n) for every n above the smallest key. Throws
/// MissingTeamSize when the keys are not contiguous.
std::map<int, double> marginal_utility(const std::map<int, double>& errors_by_n);

struct Correlation {
  std::size_t n = 0;
  double r = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double x_mean = 0.0;
  double sxx = 0.0;
  double residual_se = 0.0;
  double t_crit = 0.0;  // two-sided 95%, n - 2 degrees of freedom

  double predict(double x) const { return intercept + slope * x; }
  /// 95% confidence band of the fitted mean at x.
  std::pair<double, double> band(double x) const;
};

/// Pearson R and least-squares fit of y on x. Throws DegenerateVariance.
Correlation correlation(std::span<const double> x, std::span<const double> y);

struct Heatmap {
  int width = 0;
  int height = 0;
  std::vector<long> mobile;  // row-major, row 0 at the bottom
  std::vector<long> fixed;
  std::vector<long> combined() const;
};

/// Per sensor and step t = 1..T, every cell of the sensor's footprint gains one count.
Heatmap visibility_heatmap(std::span<const EpisodeRecord> records, const GridWorld& world,
                           const SensorSpec& mobile_spec = tracking_sensor(),
                           const SensorSpec& camera_spec = camera_sensor());

struct HybridSplit {
  int n_fixed = 0;
  int n_mobile = 0;
};

/// One scenario per split. (budget, 0) is the FC baseline, (0, budget) the
/// mobile planner alone; mixed splits add fc_place cameras to the mobile team.
std::vector<ScenarioSpec> hybrid_grid(const ScenarioSpec& base, int budget,
                                      const std::vector<HybridSplit>& splits, PlannerKind mobile);

SweepResult hybrid_sweep(const ScenarioSpec& base, int budget,
                         const std::vector<HybridSplit>& splits, PlannerKind mobile,
                         unsigned workers = 0);

/// Candidate single-camera placements: for each room the heading with the
/// largest footprint, rooms ranked by that footprint, first `count` kept.
std::vector<SensorPose> placement_candidates(const GridWorld& world, int count = 7,
                                             const SensorSpec& spec = camera_sensor());

/// One scenario per candidate: one fixed camera at the candidate plus the
/// base scenario's mobile robots.
std::vector<ScenarioSpec> placement_grid(const ScenarioSpec& base,
                                         const std::vector<SensorPose>& candidates);

std::string rows_to_csv(const SweepResult& result);
std::string aggregates_to_csv(const SweepResult& result);
std::string heatmap_to_string(const Heatmap& heatmap);

}  // namespace coopmon
