#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coopmon/belief.hpp"
#include "coopmon/crowd.hpp"
#include "coopmon/grid_world.hpp"
#include "coopmon/sensing.hpp"

namespace coopmon {

/// Discrete command as indices into the action set: v_idx -> {0, 1, 2} m/s,
/// delta_idx -> {-pi/8, 0, +pi/8} rad/s.
struct ActionCommand {
  int v_idx = 0;
  int delta_idx = 1;
  bool operator==(const ActionCommand&) const = default;
};

struct ActionSet {
  std::array<double, 3> v{0.0, 1.0, 2.0};
  std::array<double, 3> delta{-kPi / 8.0, 0.0, kPi / 8.0};
};

struct AgentState {
  Vec2 p;
  double theta = 0.0;
  double v = 0.0;
  std::optional<LidarScan> lidar;
  SensorPose pose() const { return {p, theta}; }
  bool operator==(const AgentState&) const = default;
};

struct EnvParams {
  double dt = 1.0;
  int horizon = 500;
  int n_robots = 5;
  double v_max = 2.0;
  double a_max = 1.0;
  double spawn_separation_m = 2.0;
  ActionSet actions;
  SensorSpec tracking = tracking_sensor();
  SensorSpec lidar = lidar_sensor();
  SensorSpec camera = camera_sensor();
  NoiseModel noise;
  BeliefInit belief_init = BeliefInit::Informed;
  RewardClip clip;
  Task task = Task::Tracking;
  bool deployment_mode = false;      // belief fed by noisy measurements
  bool post_update_heading = false;  // integrate position with the new heading
  std::vector<SensorPose> cameras;
};

void check_env_params(const EnvParams& params);

/// Unicycle update: heading first, position from the pre-update heading and
/// speed, speed ramped toward the command by at most a_max*dt. A move whose
/// segment touches a wall cell is cancelled and the speed zeroed.
AgentState kinematics_step(const AgentState& state, ActionCommand action, const EnvParams& params,
                           const GridWorld& world);

struct ObservedHuman {
  int slot = 0;  // position in this robot's visible list
  HumanMeasurement m;
  bool operator==(const ObservedHuman&) const = default;
};

struct PeerState {
  Vec2 p;
  double theta = 0.0;
  double v = 0.0;
  bool operator==(const PeerState&) const = default;
};

struct LocalObservation {
  AgentState ego;
  std::vector<PeerState> peers;
  std::vector<ObservedHuman> humans;
  bool operator==(const LocalObservation&) const = default;
};

/// Training-only channel.
struct StepInfo {
  std::vector<Pose> humans;                       // ground truth
  std::vector<std::vector<std::uint8_t>> robot_visibility;  // [robot][human] one-hot
  std::vector<std::uint8_t> camera_visibility;    // union over fixed cameras
  std::vector<int> union_visible;
  std::array<double, 3> task_rewards{};
};

struct StepResult {
  std::vector<LocalObservation> observations;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// One environment instance. Steps are strictly sequential.
class SimState {
 public:
  static std::pair<SimState, std::vector<LocalObservation>> reset(
      std::shared_ptr<const GridWorld> world, std::shared_ptr<const std::vector<HumanPlan>> crowd,
      const EnvParams& params, std::uint64_t seed);

  StepResult step(std::span<const ActionCommand> actions);

  int t() const { return t_; }
  bool done() const { return t_ >= params_.horizon; }
  std::uint64_t seed() const { return seed_; }
  const EnvParams& params() const { return params_; }
  const GridWorld& world() const { return *world_; }
  const std::vector<HumanPlan>& crowd() const { return *crowd_; }
  const std::vector<AgentState>& robots() const { return robots_; }
  std::vector<Pose> humans() const;
  const TeamBelief& belief() const { return belief_; }
  const std::vector<LocalObservation>& observations() const { return last_obs_; }
  const StepInfo& last_info() const { return last_info_; }
  /// Positions fed to the belief at the latest step (visible humans only are meaningful).
  const std::vector<Vec2>& belief_input() const { return belief_input_; }

 private:
  SimState() = default;
  void sense(StepInfo& info);

  std::shared_ptr<const GridWorld> world_;
  std::shared_ptr<const std::vector<HumanPlan>> crowd_;
  EnvParams params_;
  std::uint64_t seed_ = 0;
  int t_ = 0;
  Rng noise_rng_;
  std::vector<AgentState> robots_;
  TeamBelief belief_;
  std::vector<LocalObservation> last_obs_;
  StepInfo last_info_;
  std::vector<Vec2> belief_input_;
};

/// Robot spawn poses: distinct free cell centres at least spawn_separation_m
/// apart, uniform headings. Throws SpawnFailed.
std::vector<AgentState> spawn_robots(const GridWorld& world, int n, double separation_m, Rng& rng);

class Planner {
 public:
  virtual ~Planner() = default;
  virtual std::string name() const = 0;
  virtual void reset(const GridWorld& world, std::span<const AgentState> robots,
                     const EnvParams& params, std::uint64_t seed) = 0;
  virtual std::vector<ActionCommand> act(int t, std::span<const AgentState> robots,
                                         std::span<const LocalObservation> observations) = 0;
};

/// Delegates decisions to a callback, e.g. a bridge-served policy.
class ExternalPlanner : public Planner {
 public:
  using Policy = std::function<std::vector<ActionCommand>(int, std::span<const LocalObservation>)>;
  explicit ExternalPlanner(Policy policy) : policy_(std::move(policy)) {}
  std::string name() const override { return "external"; }
  void reset(const GridWorld&, std::span<const AgentState>, const EnvParams&, std::uint64_t) override {}
  std::vector<ActionCommand> act(int t, std::span<const AgentState>,
                                 std::span<const LocalObservation> obs) override {
    return policy_(t, obs);
  }

 private:
  Policy policy_;
};

struct EpisodeMetrics {
  double tracking_error = 0.0;
  double occupancy_error = 0.0;
  double flow_error = 0.0;
  std::array<double, 3> total_reward{};
  bool operator==(const EpisodeMetrics&) const = default;
};

struct EpisodeRecord {
  std::uint64_t seed = 0;
  Task task = Task::Tracking;
  int horizon = 0;
  double dt = 1.0;
  int n_robots = 0;
  bool deployment_mode = false;
  std::vector<SensorPose> cameras;
  std::vector<std::vector<Pose>> robots;         // t = 0..T
  std::vector<std::vector<Pose>> humans;         // t = 0..T
  std::vector<std::vector<ActionCommand>> actions;  // t = 0..T-1
  std::vector<std::vector<std::vector<int>>> robot_visible;  // t, robot
  std::vector<std::vector<int>> camera_visible;  // t, union over cameras
  std::vector<std::vector<int>> union_visible;   // t
  std::vector<std::vector<Vec2>> belief_input;   // t, per human (meaningful where visible)
  std::vector<std::vector<Vec2>> belief;         // t, snapshot after the update
  std::vector<std::array<double, 3>> rewards;    // t = 1..T
  std::vector<long> final_flow;
  EpisodeMetrics metrics;

  double reward_sum(Task t) const { return metrics.total_reward[static_cast<int>(t)]; }
  double error(Task t) const;
  bool operator==(const EpisodeRecord&) const = default;
};

/// reset + horizon steps with the planner choosing actions.
EpisodeRecord run_episode(std::shared_ptr<const GridWorld> world,
                          std::shared_ptr<const std::vector<HumanPlan>> crowd,
                          const EnvParams& params, Planner& planner, std::uint64_t seed);

/// Metrics from the logged trajectories and belief trace.
EpisodeMetrics compute_metrics(const EpisodeRecord& record, const GridWorld& world);

std::string record_to_string(const EpisodeRecord& record);
void save_record(const EpisodeRecord& record, const std::filesystem::path& path);

}  // namespace coopmon
