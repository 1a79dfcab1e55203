#include "coopmon/control.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "coopmon/errors.hpp"

namespace coopmon {

int snap_speed(double v, const ActionSet& actions) {
  int best = 0;
  for (int k = 1; k < 3; ++k) {
    if (std::abs(actions.v[k] - v) < std::abs(actions.v[best] - v)) best = k;
  }
  return best;
}

int snap_steer(double heading_err, const ActionSet& actions, double dt) {
  const double step = std::abs(actions.delta[2]) * dt;
  if (std::abs(heading_err) <= step / 2.0) return 1;
  return heading_err > 0.0 ? 2 : 0;
}

PathTracker::PathTracker(std::vector<Vec2> points, bool closed, double lookahead_m)
    : points_(std::move(points)), closed_(closed), lookahead_(lookahead_m) {
  if (closed_ && points_.size() > 1 && !(points_.front() == points_.back())) {
    points_.push_back(points_.front());
  }
  cum_.assign(points_.size(), 0.0);
  for (std::size_t k = 1; k < points_.size(); ++k) {
    cum_[k] = cum_[k - 1] + distance(points_[k - 1], points_[k]);
  }
  length_ = cum_.empty() ? 0.0 : cum_.back();
  const std::size_t n = points_.size();
  for (std::size_t k = closed_ ? 0 : 1; n > 2 && k + 1 < n; ++k) {
    const Vec2 in = k == 0 ? points_[0] - points_[n - 2] : points_[k] - points_[k - 1];
    const Vec2 out = points_[k + 1] - points_[k];
    if (dot(in, out) < 0.0) corners_.push_back(cum_[k]);
  }
}

std::optional<double> PathTracker::pending_corner() const {
  constexpr double kTol = 1e-6;
  std::optional<double> best;
  for (double c : corners_) {
    if (reached_ && std::abs(c - *reached_) < kTol) continue;
    double ahead = c - progress_;
    if (closed_) {
      ahead = std::fmod(ahead + kTol, length_);
      if (ahead < 0.0) ahead += length_;
      ahead -= kTol;
    } else if (ahead < -kTol) {
      continue;
    }
    if (!best || ahead < *best) best = ahead;
  }
  if (!best) return std::nullopt;
  return progress_ + *best;
}

Vec2 PathTracker::at_arc(double arc) const {
  if (closed_ && length_ > 0.0) {
    arc = std::fmod(arc, length_);
    if (arc < 0.0) arc += length_;
  }
  return point_at_arc(points_, arc);
}

std::size_t PathTracker::segment() const {
  if (points_.size() < 2) return 0;
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), progress_);
  const std::size_t k = static_cast<std::size_t>(it - cum_.begin());
  return std::min(k == 0 ? 0 : k - 1, points_.size() - 2);
}

double PathTracker::project_window(Vec2 p, double max_ahead) const {
  constexpr double kBack = 1.0;
  const double kAhead = std::min(5.0, max_ahead);
  double best_arc = progress_;
  double best_d = std::numeric_limits<double>::infinity();
  double best_ahead = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < points_.size(); ++k) {
    const Vec2 a = points_[k - 1];
    const Vec2 ab = points_[k] - a;
    const double len = norm(ab);
    double t = 0.0;
    if (len > 0.0) t = std::clamp(dot(p - a, ab) / (len * len), 0.0, 1.0);
    const double arc = cum_[k - 1] + t * len;
    double ahead = 0.0;
    if (started_) {
      ahead = arc - progress_;
      if (closed_) ahead = std::remainder(ahead, length_);
      if (ahead < -kBack || ahead > kAhead) continue;
    }
    // Overlapping out-and-back stretches tie on distance; prefer moving on.
    const double d = distance(p, a + ab * t);
    if (d < best_d - 1e-6 || (d <= best_d + 1e-6 && ahead > best_ahead)) {
      best_d = std::min(d, best_d);
      best_arc = arc;
      best_ahead = ahead;
    }
  }
  return best_arc;
}

bool PathTracker::arrived(Vec2 p, double arrive_m) const {
  if (points_.empty()) return true;
  return !closed_ && length_ - progress_ < 1e-9 + arrive_m && distance(p, points_.back()) <= arrive_m;
}

ActionCommand PathTracker::act(const GridWorld& world, const AgentState& robot, double v_target,
                               const EnvParams& params) {
  return act(world, robot, [v_target](std::size_t) { return v_target; }, params);
}

ActionCommand PathTracker::act(const GridWorld& world, const AgentState& robot,
                               const std::function<double(std::size_t)>& segment_speed,
                               const EnvParams& params) {
  const double dt = params.dt;
  auto segment_free = [&](Vec2 a, Vec2 b) {
    if (!world.in_bounds(b)) return false;
    for (CellIndex c : traverse_segment(world, a, b)) {
      if (!world.is_free(c)) return false;
    }
    return true;
  };
  // Where the robot will be after this step regardless of the command.
  Vec2 p1 = robot.p + Vec2{std::cos(robot.theta), std::sin(robot.theta)} * (robot.v * dt);
  if (!segment_free(robot.p, p1)) p1 = robot.p;
  if (points_.empty()) return {0, 1};

  // Sharp corners must be reached before the tracker looks past them, or the
  // lookahead cuts across out-and-back spurs. A corner that cannot be reached
  // within a few dozen steps is given up.
  const double reach = 1.5 * world.cell_size();
  auto corner = started_ ? pending_corner() : std::nullopt;
  if (corner && (distance(p1, at_arc(*corner)) <= reach || ++corner_steps_ > 30)) {
    reached_ = closed_ ? std::fmod(*corner, length_) : *corner;
    corner_steps_ = 0;
    corner = pending_corner();
  }
  const double limit = corner ? *corner - progress_ : std::numeric_limits<double>::infinity();
  progress_ = project_window(p1, limit);
  started_ = true;
  if (closed_ && length_ > 0.0) {
    progress_ = std::fmod(progress_, length_);
    if (progress_ < 0.0) progress_ += length_;
  }
  if (reached_ && closed_) {
    const double past = std::fmod(progress_ - *reached_ + length_, length_);
    if (past > 2.0 * lookahead_ && past < length_ - lookahead_) reached_.reset();
  }
  corner = pending_corner();

  const double v_target = segment_speed(segment());
  double target_arc = progress_ + lookahead_;
  if (!closed_) target_arc = std::min(target_arc, length_);
  const bool at_corner = corner && *corner < target_arc;
  if (at_corner) target_arc = *corner;
  Vec2 target = at_arc(target_arc);
  double remaining = closed_ ? std::numeric_limits<double>::infinity()
                             : (length_ - progress_) + distance(p1, at_arc(progress_));
  if (!closed_ && distance(target, p1) < 1e-9) {
    return {0, 1};
  }
  // Farthest clear chord to the path within the lookahead, then points
  // behind the projection, then the centre of the current cell.
  const double step = world.cell_size() / 2.0;
  bool found = segment_free(p1, target);
  for (double back = step; !found && back <= 2.0 * lookahead_; back += step) {
    target = at_arc(target_arc - back);
    found = distance(target, p1) > 1e-9 && segment_free(p1, target);
  }
  if (!found) target = world.cell_center(world.cell_of(p1));
  if (distance(target, p1) < 1e-9) return {0, 1};

  const double desired = std::atan2(target.y - p1.y, target.x - p1.x);
  const double err = wrap_pi(desired - robot.theta);
  double v_want = std::min(v_target, remaining / dt);
  if (at_corner) v_want = std::min(v_want, distance(p1, target) / dt);

  // Largest command index in [0, top] whose move and braking distance stay free.
  auto safe_speed = [&](int steer, int top) {
    const double theta1 = wrap_angle(robot.theta + params.actions.delta[steer] * dt);
    const Vec2 heading{std::cos(theta1), std::sin(theta1)};
    for (int idx = top; idx > 0; --idx) {
      const double dv = std::clamp(params.actions.v[idx] - robot.v, -params.a_max * dt, params.a_max * dt);
      const double v1 = std::clamp(robot.v + dv, 0.0, params.v_max);
      const double reach = (v1 + std::max(v1 - params.a_max * dt, 0.0)) * dt;
      if (reach <= 0.0 || segment_free(p1, p1 + heading * reach)) return idx;
    }
    return 0;
  };
  auto residual_of = [&](int steer) {
    const double theta1 = wrap_angle(robot.theta + params.actions.delta[steer] * dt);
    return std::abs(wrap_pi(desired - theta1));
  };

  const int steer = snap_steer(err, params.actions, dt);
  const int top = residual_of(steer) > kPi / 4.0 ? 0 : snap_speed(v_want, params.actions);
  const int idx = safe_speed(steer, top);
  if (idx > 0 || top == 0) return {idx, steer};
  // The snapped move is blocked: take the best-aligned steering that can move.
  int best_steer = steer;
  int best_idx = 0;
  double best_res = kPi;
  for (int s2 = 0; s2 < 3; ++s2) {
    const double res = residual_of(s2);
    if (s2 == steer || res > kPi / 4.0) continue;
    const int k = safe_speed(s2, top);
    if (k > 0 && res < best_res) {
      best_res = res;
      best_steer = s2;
      best_idx = k;
    }
  }
  if (best_idx == 0) return {0, err >= 0.0 ? 2 : 0};  // rotate in place to get unstuck
  return {best_idx, best_steer};
}

std::vector<Vec2> robot_path(const GridWorld& world, const CellMask& buffered, Vec2 from, Vec2 to) {
  const CellIndex a = world.cell_of(from);
  const CellIndex b = world.cell_of(to);
  if (a == b) return {from, to};
  // Breadth-first walk over free cells to the nearest buffered cell.
  auto to_buffered = [&](CellIndex start) {
    std::vector<CellIndex> chain{start};
    if (buffered[world.flat(start)]) return chain;
    std::vector<std::int64_t> parent(world.cells().size(), -2);
    std::deque<std::size_t> queue{world.flat(start)};
    parent[world.flat(start)] = -1;
    constexpr int di[] = {1, -1, 0, 0};
    constexpr int dj[] = {0, 0, 1, -1};
    while (!queue.empty()) {
      const std::size_t cur = queue.front();
      queue.pop_front();
      if (buffered[cur]) {
        chain.clear();
        for (std::int64_t k = static_cast<std::int64_t>(cur); k >= 0; k = parent[k]) {
          chain.push_back(world.unflat(static_cast<std::size_t>(k)));
        }
        std::reverse(chain.begin(), chain.end());
        return chain;
      }
      const CellIndex c = world.unflat(cur);
      for (int k = 0; k < 4; ++k) {
        const int ni = c.i + di[k];
        const int nj = c.j + dj[k];
        if (!world.is_free(ni, nj)) continue;
        const std::size_t n = world.flat(ni, nj);
        if (parent[n] != -2) continue;
        parent[n] = static_cast<std::int64_t>(cur);
        queue.push_back(n);
      }
    }
    throw NoPath("no buffered cell reachable");
  };
  const std::vector<CellIndex> head = to_buffered(a);
  std::vector<CellIndex> tail = to_buffered(b);
  std::reverse(tail.begin(), tail.end());
  const GridPath mid = astar_cells(world, buffered, head.back(), tail.front());
  std::vector<Vec2> pts{from};
  for (std::size_t k = 1; k + 1 < head.size(); ++k) pts.push_back(world.cell_center(head[k]));
  if (head.size() > 1) pts.push_back(world.cell_center(head.back()));
  for (std::size_t k = 1; k + 1 < mid.points.size(); ++k) pts.push_back(mid.points[k]);
  if (tail.size() > 1) pts.push_back(world.cell_center(tail.front()));
  for (std::size_t k = 1; k + 1 < tail.size(); ++k) pts.push_back(world.cell_center(tail[k]));
  pts.push_back(to);
  // Drop consecutive duplicates.
  std::vector<Vec2> out;
  for (Vec2 p : pts) {
    if (out.empty() || !(out.back() == p)) out.push_back(p);
  }
  return out;
}

}  // namespace coopmon
