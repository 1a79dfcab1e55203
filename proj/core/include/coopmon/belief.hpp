#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coopmon/grid_world.hpp"

namespace coopmon {

enum class Task { Tracking = 0, Occupancy = 1, Flow = 2 };
inline constexpr std::array<Task, 3> kAllTasks{Task::Tracking, Task::Occupancy, Task::Flow};
const char* task_name(Task task);
Task parse_task(const std::string& name);

enum class BeliefInit { Informed, Uninformed };

/// Per-component and total caps on the reward; infinity disables a cap.
struct RewardClip {
  double per_component = 5.0;
  double total = 10.0;
};

struct PositionBelief {
  std::vector<Vec2> p;
  std::vector<int> last_seen;  // -1 = never
  bool operator==(const PositionBelief&) const = default;
};

struct FlowBelief {
  std::vector<std::optional<int>> prev_zone;
  std::vector<std::optional<int>> cur_zone;
  std::vector<int> tau;  // step of the last recorded transition, -1 if none
  int zones = 0;
  std::vector<long> flow;  // zones x zones, row = from
  long at(int from, int to) const { return flow[static_cast<std::size_t>(from) * zones + to]; }
  bool operator==(const FlowBelief&) const = default;
};

/// Informed: true initial positions, seen at t = 0. Uninformed: map centre, never seen.
PositionBelief init_belief(const GridWorld& world, std::span<const Vec2> initial, BeliefInit mode);

/// Informed seeds the current zone from the initial positions.
FlowBelief init_flow_belief(const GridWorld& world, std::span<const Vec2> initial, BeliefInit mode);

/// Sets p_j to observed[j] for every j in visible and returns per-human L1 moves.
std::vector<double> update_position_belief(PositionBelief& belief, std::span<const int> visible,
                                           std::span<const Vec2> observed, int t);

/// Records a zone transition for every visible human seen in a zone that
/// differs from its current believed zone. Corridor sightings change nothing.
/// Returns the number of transitions recorded.
long update_flow_belief(FlowBelief& belief, std::span<const int> visible,
                        std::span<const Vec2> observed, const GridWorld& world, int t);

/// counts[z] = number of belief positions whose zone_of is z.
std::vector<int> estimate_occupancy(std::span<const Vec2> positions, const GridWorld& world);

/// Task estimate m_t as a flat vector: stacked (x, y) for tracking, zone
/// counts for occupancy, row-major flow matrix for flow.
std::vector<double> task_estimate(Task task, const PositionBelief& pos, const FlowBelief& flow,
                                  const GridWorld& world);

/// ||m_cur - m_prev||_1 with per-component and total clipping. Tracking
/// components are per human (pairs of coordinates).
double reward(Task task, std::span<const double> m_prev, std::span<const double> m_cur,
              const RewardClip& clip);

/// Team belief driving the three estimators together.
class TeamBelief {
 public:
  TeamBelief() = default;
  TeamBelief(const GridWorld& world, std::span<const Vec2> initial, BeliefInit mode);

  /// Applies one union observation at step t and returns the reward of each task.
  std::array<double, 3> observe(std::span<const int> visible, std::span<const Vec2> observed,
                                int t, const RewardClip& clip);

  const PositionBelief& position() const { return position_; }
  const FlowBelief& flow() const { return flow_; }
  std::vector<double> estimate(Task task) const;

 private:
  const GridWorld* world_ = nullptr;
  PositionBelief position_;
  FlowBelief flow_;
  std::array<std::vector<double>, 3> m_;
};

/// Zone-transition counts of a position trace under the estimator's corridor
/// rule, where every human is observed at every step.
std::vector<long> true_flow(std::span<const std::vector<Vec2>> positions_by_t, const GridWorld& world);

/// Mean over steps and humans of the Euclidean belief error.
double tracking_error(std::span<const std::vector<Vec2>> belief_by_t,
                      std::span<const std::vector<Vec2>> truth_by_t);
/// Mean over steps of the L1 occupancy error.
double occupancy_error(std::span<const std::vector<Vec2>> belief_by_t,
                       std::span<const std::vector<Vec2>> truth_by_t, const GridWorld& world);
/// L1 distance between the final flow estimate and the true transition counts.
double flow_error(std::span<const long> final_flow, std::span<const std::vector<Vec2>> truth_by_t,
                  const GridWorld& world);

}  // namespace coopmon
