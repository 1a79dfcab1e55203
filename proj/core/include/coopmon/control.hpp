#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "coopmon/env.hpp"
#include "coopmon/navigation.hpp"

namespace coopmon {

/// Nearest speed command index, ties toward the slower command.
int snap_speed(double v, const ActionSet& actions);
/// Steering index: straight when |err| <= half the turn step (ties go straight),
/// otherwise a full turn step toward the error.
int snap_steer(double heading_err, const ActionSet& actions, double dt);

/// Pure-pursuit tracker for a robot with discrete commands. Because the
/// position moves with the pre-update heading and speed, steering is computed
/// from the predicted next position. Works on open paths and closed loops.
class PathTracker {
 public:
  PathTracker() = default;
  PathTracker(std::vector<Vec2> points, bool closed, double lookahead_m = 2.0);

  ActionCommand act(const GridWorld& world, const AgentState& robot, double v_target,
                    const EnvParams& params);
  /// Target speed chosen per segment, after the progress update.
  ActionCommand act(const GridWorld& world, const AgentState& robot,
                    const std::function<double(std::size_t)>& segment_speed,
                    const EnvParams& params);

  /// Pins the progress to the path start (closed loops entered at point 0).
  void start() {
    progress_ = 0.0;
    started_ = true;
    reached_.reset();
    corner_steps_ = 0;
  }

  bool empty() const { return points_.empty(); }
  bool closed() const { return closed_; }
  double length() const { return length_; }
  double progress() const { return progress_; }
  /// Open paths: projection at the end and within arrive_m of the last point.
  bool arrived(Vec2 p, double arrive_m) const;
  /// Index of the segment containing the current progress.
  std::size_t segment() const;
  const std::vector<Vec2>& points() const { return points_; }

 private:
  Vec2 at_arc(double arc) const;
  double project_window(Vec2 p, double max_ahead) const;
  /// Arc of the next sharp corner at or after the progress that has not been
  /// reached yet (unwrapped, so it may exceed the length on closed loops).
  std::optional<double> pending_corner() const;

  std::vector<Vec2> points_;  // closed loops repeat the first point at the end
  std::vector<double> cum_;
  bool closed_ = false;
  double length_ = 0.0;
  double lookahead_ = 2.0;
  double progress_ = 0.0;
  bool started_ = false;
  std::vector<double> corners_;  // arcs of vertices turning more than 90 degrees
  std::optional<double> reached_;
  int corner_steps_ = 0;
};

/// Shortest buffered path for a robot: A* over cells with buffer_m clearance;
/// a start or goal cell outside that set is joined through plain free cells.
std::vector<Vec2> robot_path(const GridWorld& world, const CellMask& buffered, Vec2 from, Vec2 to);

}  // namespace coopmon
