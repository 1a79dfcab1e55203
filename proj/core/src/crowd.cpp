#include "coopmon/crowd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "coopmon/errors.hpp"

namespace coopmon {

TransitionMatrix build_transition_matrix(const GridWorld& world, const std::optional<Skew>& skew) {
  const std::size_t n = world.rooms().size();
  if (n < 2) throw ConfigError("transition matrix needs at least two rooms");
  TransitionMatrix m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double w = 1.0 / static_cast<double>(n - 1);
      if (skew && world.room_zone()[j] == skew->zone) w *= skew->multiplier;
      m[i][j] = w;
      total += w;
    }
    for (double& v : m[i]) v /= total;
  }
  return m;
}

void check_transition_matrix(const TransitionMatrix& matrix) {
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    if (matrix[i].size() != matrix.size()) throw ConfigError("transition matrix is not square");
    double sum = 0.0;
    for (double v : matrix[i]) {
      if (!(v >= 0.0)) throw ConfigError("transition probabilities must be nonnegative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ConfigError("transition row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
    if (matrix[i][i] != 0.0) {
      throw ConfigError("transition row " + std::to_string(i) + " has a self-transition");
    }
  }
}

double sample_dwell(const DwellDistribution& dwell, double horizon_s, Rng& rng) {
  const double d = std::exp(gaussian(rng, dwell.mu, dwell.sigma));
  return std::clamp(d, 1.0, std::max(1.0, horizon_s));
}

std::vector<GoalVisit> sample_goal_sequence(const TransitionMatrix& matrix,
                                            const DwellDistribution& dwell, double horizon_s,
                                            Rng& rng) {
  std::vector<GoalVisit> goals;
  if (matrix.empty()) return goals;
  int room = static_cast<int>(uniform_index(rng, matrix.size()));
  double total = 0.0;
  while (true) {
    const double d = sample_dwell(dwell, horizon_s, rng);
    goals.push_back({room, d});
    total += d;
    if (total >= horizon_s) break;
    const auto& row = matrix[room];
    room = std::discrete_distribution<int>(row.begin(), row.end())(rng);
  }
  return goals;
}

Pose pure_pursuit_step(const GridWorld& world, const CellMask& allowed, const Pose& state,
                       std::span<const Vec2> path, const PursuitParams& params) {
  Pose next = state;
  const double total = polyline_length(path);
  const double cs = world.cell_size();
  {
    const auto here = project_onto_polyline(path, state.p);
    if (total - here.arc < 1e-9 && distance(state.p, path.back()) < cs) {
      next.v = 0.0;
      return next;
    }
  }

  // Position advances with the pre-update heading and speed.
  next.p = {state.p.x + state.v * std::cos(state.theta) * params.dt,
            state.p.y + state.v * std::sin(state.theta) * params.dt};
  if (!(next.p == state.p) && !segment_in_mask(world, allowed, state.p, next.p)) {
    next.p = state.p;
    next.v = 0.0;
    return next;
  }

  // The new heading and speed act from next.p on the following step, so the
  // pursuit geometry is evaluated there. Target: farthest path point within
  // the lookahead whose chord stays in allowed cells, falling back to points
  // behind the projection and finally to the centre of the current cell.
  const auto proj = project_onto_polyline(path, next.p);
  Vec2 target = world.cell_center(world.cell_of(next.p));
  for (double ahead = params.lookahead_m; ahead >= -params.lookahead_m; ahead -= cs / 2.0) {
    const Vec2 candidate = point_at_arc(path, proj.arc + ahead);
    if (distance(candidate, next.p) > 1e-9 &&
        segment_in_mask(world, allowed, next.p, candidate)) {
      target = candidate;
      break;
    }
  }

  double turn = 0.0;
  double err = 0.0;
  const Vec2 to_target = target - next.p;
  if (norm(to_target) > 1e-12) {
    err = wrap_pi(std::atan2(to_target.y, to_target.x) - state.theta);
    turn = std::clamp(err / params.dt, -params.omega_max, params.omega_max);
  }
  next.theta = wrap_angle(state.theta + turn * params.dt);

  // Largest speed (scaled by the heading error left after the turn) whose
  // move from next.p stays in allowed cells and near the path, and whose end
  // point still has a clear chord back onto the path. Zero always qualifies.
  const double remaining = distance(next.p, path.back()) + (total - proj.arc);
  const double cap = std::min({params.v_target, params.v_max, remaining / params.dt,
                               norm(to_target) / params.dt});
  const double residual = std::abs(err) - std::abs(turn) * params.dt;
  const double align = residual >= kPi / 2.0 ? 0.0 : std::cos(residual);
  const double tolerance = std::max(cs, proj.distance);
  const Vec2 heading{std::cos(next.theta), std::sin(next.theta)};
  constexpr int kLevels = 10;
  next.v = 0.0;
  for (int level = kLevels; level > 0; --level) {
    const double v = cap * align * level / kLevels;
    if (v <= 0.0) break;
    const Vec2 end = next.p + heading * (v * params.dt);
    bool near_path = true;
    for (int q = 1; q <= 4 && near_path; ++q) {
      const Vec2 probe = next.p + heading * (v * params.dt * q / 4.0);
      near_path = project_onto_polyline(path, probe).distance <= tolerance;
    }
    if (!near_path || !segment_in_mask(world, allowed, next.p, end)) continue;
    const auto end_proj = project_onto_polyline(path, end);
    const Vec2 rejoin = point_at_arc(path, end_proj.arc + cs);
    if (segment_in_mask(world, allowed, end, rejoin)) {
      next.v = v;
      break;
    }
  }
  return next;
}

std::vector<Pose> crowd_at(std::span<const HumanPlan> plans, int t) {
  std::vector<Pose> out;
  out.reserve(plans.size());
  for (const HumanPlan& h : plans) out.push_back(h.trajectory.at(static_cast<std::size_t>(t)));
  return out;
}

namespace {

struct RoomTargets {
  std::vector<std::vector<CellIndex>> cells;  // buffered cells per room
  std::vector<Vec2> goal;                     // dwell point per room
};

RoomTargets room_targets(const GridWorld& world, const CellMask& allowed) {
  RoomTargets rt;
  const auto& rooms = world.rooms();
  rt.cells.resize(rooms.size());
  rt.goal.resize(rooms.size());
  for (const Room& r : rooms) {
    for (int j = 0; j < world.height_cells(); ++j) {
      for (int i = 0; i < world.width_cells(); ++i) {
        if (allowed[world.flat(i, j)] && r.rect.contains(world.cell_center({i, j}))) {
          rt.cells[r.id].push_back({i, j});
        }
      }
    }
    const Vec2 c = r.centroid();
    if (allowed[world.flat(world.cell_of(c))]) {
      rt.goal[r.id] = c;
    } else if (!rt.cells[r.id].empty()) {
      // Nearest buffered cell centre inside the room.
      Vec2 best = world.cell_center(rt.cells[r.id].front());
      for (CellIndex ci : rt.cells[r.id]) {
        const Vec2 q = world.cell_center(ci);
        if (distance(q, c) < distance(best, c)) best = q;
      }
      rt.goal[r.id] = best;
    }
  }
  return rt;
}

std::vector<Vec2> plan_walk(const GridWorld& world, const CellMask& allowed, Vec2 from, Vec2 goal) {
  GridPath gp = astar_cells(world, allowed, world.cell_of(from), world.cell_of(goal));
  std::vector<Vec2> pts = std::move(gp.points);
  if (!(pts.back() == goal)) pts.push_back(goal);
  return pts;
}

}  // namespace

std::vector<HumanPlan> synthesize_crowd(const GridWorld& world, const CrowdParams& params,
                                        int horizon_steps, double dt, std::uint64_t seed) {
  std::vector<HumanPlan> plans;
  if (params.m <= 0) return plans;
  if (horizon_steps < 0) throw ConfigError("horizon must be nonnegative");
  const std::size_t n_rooms = world.rooms().size();
  TransitionMatrix matrix;
  if (n_rooms >= 2) {
    matrix = params.transition_matrix ? *params.transition_matrix
                                      : build_transition_matrix(world, params.skew);
    if (matrix.size() != n_rooms) throw ConfigError("transition matrix size differs from room count");
    check_transition_matrix(matrix);
  }
  const CellMask allowed = buffered_mask(world, params.buffer_m);
  const RoomTargets targets = room_targets(world, allowed);
  const double horizon_s = std::max(1.0, horizon_steps * dt);
  PursuitParams pursuit{params.lookahead_m, params.v_max, params.v_max, params.omega_max, dt};

  for (int h = 0; h < params.m; ++h) {
    Rng rng = make_rng(seed, Stream::Crowd, static_cast<std::uint64_t>(h));
    HumanPlan plan;
    plan.human_id = h;
    if (n_rooms >= 2) {
      plan.goal_sequence = sample_goal_sequence(matrix, params.dwell, horizon_s, rng);
    } else {
      plan.goal_sequence = {{0, horizon_s}};
    }
    const int spawn_room = plan.goal_sequence.front().room;
    const auto& spawn_cells = targets.cells[spawn_room];
    if (spawn_cells.empty()) {
      throw GenerationFailed("room " + std::to_string(spawn_room) +
                             " has no cell respecting the wall buffer");
    }
    Pose pose;
    pose.p = world.cell_center(spawn_cells[uniform_index(rng, spawn_cells.size())]);
    pose.theta = uniform(rng, 0.0, kTwoPi);
    pose.v = 0.0;
    plan.trajectory.reserve(static_cast<std::size_t>(horizon_steps) + 1);
    plan.trajectory.push_back(pose);

    std::size_t goal_idx = 0;
    bool dwelling = false;
    long dwell_left = 0;
    int stalled = 0;
    auto goal_point = [&] { return targets.goal[plan.goal_sequence[goal_idx].room]; };
    std::vector<Vec2> path = plan_walk(world, allowed, pose.p, goal_point());

    while (static_cast<int>(plan.trajectory.size()) <= horizon_steps) {
      if (dwelling) {
        pose.v = 0.0;
        if (--dwell_left <= 0) {
          dwelling = false;
          goal_idx = std::min(goal_idx + 1, plan.goal_sequence.size() - 1);
          path = plan_walk(world, allowed, pose.p, goal_point());
        }
        plan.trajectory.push_back(pose);
        continue;
      }
      const Vec2 goal = goal_point();
      if (distance(pose.p, goal) <= params.v_max * dt &&
          segment_in_mask(world, allowed, pose.p, goal)) {
        pose.p = goal;
        pose.v = 0.0;
        dwelling = true;
        dwell_left = std::max(1L, std::lround(plan.goal_sequence[goal_idx].dwell_s / dt));
        plan.trajectory.push_back(pose);
        continue;
      }
      const Pose next = pure_pursuit_step(world, allowed, pose, path, pursuit);
      stalled = next.p == pose.p ? stalled + 1 : 0;
      pose = next;
      if (stalled >= 4) {
        path = plan_walk(world, allowed, pose.p, goal);
        stalled = 0;
      }
      plan.trajectory.push_back(pose);
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

void write_trajectories(const std::vector<HumanPlan>& plans, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "human,t,x,y,theta,v\n";
  char buf[160];
  for (const HumanPlan& h : plans) {
    for (std::size_t t = 0; t < h.trajectory.size(); ++t) {
      const Pose& p = h.trajectory[t];
      std::snprintf(buf, sizeof buf, "%d,%zu,%.17g,%.17g,%.17g,%.17g\n", h.human_id, t, p.p.x,
                    p.p.y, p.theta, p.v);
      out << buf;
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<HumanPlan> read_trajectories(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "human,t,x,y,theta,v") {
    throw FormatError("trajectory file lacks the expected header");
  }
  std::map<int, HumanPlan> by_id;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int id = 0;
    std::size_t t = 0;
    Pose p;
    if (std::sscanf(line.c_str(), "%d,%zu,%lf,%lf,%lf,%lf", &id, &t, &p.p.x, &p.p.y, &p.theta,
                    &p.v) != 6) {
      throw FormatError("malformed trajectory row: " + line);
    }
    HumanPlan& h = by_id[id];
    h.human_id = id;
    if (t != h.trajectory.size()) throw FormatError("trajectory steps out of order for human " + std::to_string(id));
    h.trajectory.push_back(p);
  }
  std::vector<HumanPlan> plans;
  for (auto& [id, h] : by_id) plans.push_back(std::move(h));
  return plans;
}

}  // namespace coopmon
