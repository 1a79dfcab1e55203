#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coopmon/control.hpp"
#include "coopmon/env.hpp"
#include "coopmon/sensing.hpp"

namespace coopmon {

enum class PlannerKind { FC, WS, MCPP, PM, External };
const char* planner_name(PlannerKind kind);
PlannerKind parse_planner(const std::string& name);

// ---- fixed cameras ------------------------------------------------------

struct CameraPlacement {
  std::vector<SensorPose> poses;
  std::vector<std::size_t> candidate_index;
  std::vector<std::size_t> gains;  // newly covered free cells per pick
};

/// Room centroids x 8 compass headings, in room order.
std::vector<SensorPose> default_camera_candidates(const GridWorld& world);

/// Greedy max-new-coverage placement; ties go to the lowest candidate index.
/// Throws NoCandidates when the candidate set is empty or too small.
CameraPlacement fc_place(const GridWorld& world, int n_cams, const SensorSpec& spec,
                         const std::optional<std::vector<SensorPose>>& candidates = std::nullopt);

// ---- coverage loops -----------------------------------------------------

struct CoverageLoop {
  std::vector<Vec2> waypoints;  // cyclic; the closing edge returns to waypoints[0]
  int robot = -1;
  double length_m = 0.0;
};

struct McppParams {
  double pitch_m = 4.0;  // spanning-tree cell; sub-cells are half of it
  double buffer_m = 0.5;
  double range_m = 10.0;
};

struct McppPlan {
  std::vector<CoverageLoop> loops;
  std::vector<CellIndex> gap_cells;  // free cells beyond range_m of every waypoint
  double coverage = 0.0;             // fraction of free cells within range_m
};

/// Spanning-tree coverage: coarse grid over free space, spanning tree,
/// circumnavigation cycle through the sub-cells, split into n arcs of equal
/// length and each arc closed through free space. Robots are assigned to
/// loops greedily by distance when robot positions are given.
McppPlan mcpp_plan(const GridWorld& world, int n_robots, const McppParams& params = {},
                   std::span<const Vec2> robot_positions = {});

/// Throws CoverageGap listing the uncovered cell count.
void require_coverage(const McppPlan& plan);

double loop_length(std::span<const Vec2> waypoints);

// ---- persistent monitoring LP --------------------------------------------

struct PmRegion {
  std::vector<int> segments;
  double min_time_s = 0.0;  // time spent on these segments per cycle
};

struct PmConstraints {
  std::vector<double> caps;  // per segment speed cap; empty or +inf = none
  std::vector<PmRegion> regions;
  double max_period_s = std::numeric_limits<double>::infinity();
};

struct PmSolution {
  std::vector<double> speeds;  // per segment
  double period_s = 0.0;       // sum len_k / s_k
};

/// Per-loop LP in the paces u_k = 1/s_k: minimise the period subject to
/// 1/u_k <= min(v_max, cap_k), region dwell lower bounds and the period cap.
/// Throws Infeasible.
PmSolution pm_speeds(std::span<const double> segment_lengths, double v_max,
                     const PmConstraints& constraints = {});
std::vector<PmSolution> pm_speeds(const std::vector<CoverageLoop>& loops, double v_max,
                                  const std::vector<PmConstraints>& constraints = {});

std::vector<double> segment_lengths(const CoverageLoop& loop);

/// Seconds lost at the start of each segment to turning (and stopping for sharp turns).
std::vector<double> turn_overheads(const CoverageLoop& loop, const EnvParams& params);

/// Speed caps that fold the in-place turn and the stop/restart at each
/// waypoint into the segment that starts there.
std::vector<double> kinematic_caps(const CoverageLoop& loop, const EnvParams& params);

// ---- planners -------------------------------------------------------------

struct PlannerOptions {
  PlannerKind kind = PlannerKind::WS;
  double lookahead_m = 2.0;
  double buffer_m = 0.5;
  double arrive_m = 1.0;
  McppParams mcpp;
  bool pm_kinematic_caps = true;
  std::vector<PmConstraints> pm_constraints;  // per loop, optional
};

std::unique_ptr<Planner> make_planner(const PlannerOptions& options);

/// Cameras only: robots (if any) stand still.
class FixedCameraPlanner : public Planner {
 public:
  std::string name() const override { return "fc"; }
  void reset(const GridWorld&, std::span<const AgentState>, const EnvParams&, std::uint64_t) override {}
  std::vector<ActionCommand> act(int, std::span<const AgentState> robots,
                                 std::span<const LocalObservation>) override {
    return std::vector<ActionCommand>(robots.size(), ActionCommand{0, 1});
  }
};

/// Waypoint sampling: each robot follows an A* path to a uniformly drawn
/// buffered free cell and draws a new one on arrival.
class WaypointSamplingPlanner : public Planner {
 public:
  explicit WaypointSamplingPlanner(PlannerOptions options) : options_(std::move(options)) {}
  std::string name() const override { return "ws"; }
  void reset(const GridWorld& world, std::span<const AgentState> robots, const EnvParams& params,
             std::uint64_t seed) override;
  std::vector<ActionCommand> act(int t, std::span<const AgentState> robots,
                                 std::span<const LocalObservation> observations) override;
  const std::vector<Vec2>& goals() const { return goals_; }

 private:
  void new_goal(std::size_t r, Vec2 from);

  PlannerOptions options_;
  const GridWorld* world_ = nullptr;
  EnvParams params_;
  CellMask buffered_;
  std::vector<CellIndex> goal_cells_;
  Rng rng_;
  std::vector<Vec2> goals_;
  std::vector<PathTracker> trackers_;
  std::vector<int> stalled_;
};

/// Follows closed loops: first an approach path to the nearest loop point,
/// then the loop itself at a per-segment speed.
class LoopPlanner : public Planner {
 public:
  explicit LoopPlanner(PlannerOptions options) : options_(std::move(options)) {}
  std::string name() const override { return options_.kind == PlannerKind::PM ? "pm" : "mcpp"; }
  void reset(const GridWorld& world, std::span<const AgentState> robots, const EnvParams& params,
             std::uint64_t seed) override;
  std::vector<ActionCommand> act(int t, std::span<const AgentState> robots,
                                 std::span<const LocalObservation> observations) override;

  const McppPlan& plan() const { return plan_; }
  const std::vector<PmSolution>& speeds() const { return speeds_; }
  /// Cruise command speed of a loop segment for the given LP speed.
  double cruise_speed(std::size_t loop, std::size_t segment) const;

 private:
  PlannerOptions options_;
  const GridWorld* world_ = nullptr;
  EnvParams params_;
  CellMask buffered_;
  McppPlan plan_;
  std::vector<PmSolution> speeds_;
  std::vector<std::vector<double>> overhead_;
  std::vector<int> loop_of_robot_;
  std::vector<std::size_t> entry_;
  std::vector<PathTracker> approach_;
  std::vector<PathTracker> loop_tracker_;
  std::vector<bool> on_loop_;
};

/// One command per robot for loop following at LP speeds (spec-level helper).
std::vector<ActionCommand> loop_follow_act(LoopPlanner& planner, int t,
                                           std::span<const AgentState> robots);

}  // namespace coopmon
