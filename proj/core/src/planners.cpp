#include "coopmon/planners.hpp"

#include <cmath>
#include <deque>
#include <numeric>

#include "coopmon/errors.hpp"
#include "coopmon/simplex.hpp"

namespace coopmon {

const char* planner_name(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::FC: return "fc";
    case PlannerKind::WS: return "ws";
    case PlannerKind::MCPP: return "mcpp";
    case PlannerKind::PM: return "pm";
    case PlannerKind::External: return "external";
  }
  return "?";
}

PlannerKind parse_planner(const std::string& name) {
  for (PlannerKind k : {PlannerKind::FC, PlannerKind::WS, PlannerKind::MCPP, PlannerKind::PM,
                        PlannerKind::External}) {
    if (name == planner_name(k)) return k;
  }
  throw ConfigError("unknown planner '" + name + "'");
}

// ---- fixed cameras ------------------------------------------------------

std::vector<SensorPose> default_camera_candidates(const GridWorld& world) {
  std::vector<SensorPose> out;
  for (const Room& r : world.rooms()) {
    for (int k = 0; k < 8; ++k) out.push_back({r.centroid(), k * kPi / 4.0});
  }
  return out;
}

CameraPlacement fc_place(const GridWorld& world, int n_cams, const SensorSpec& spec,
                         const std::optional<std::vector<SensorPose>>& candidates) {
  if (n_cams < 1) throw ConfigError("fc_place needs at least one camera");
  const std::vector<SensorPose> cands = candidates ? *candidates : default_camera_candidates(world);
  if (cands.empty()) throw NoCandidates("empty candidate set");
  if (static_cast<std::size_t>(n_cams) > cands.size()) {
    throw NoCandidates(std::to_string(n_cams) + " cameras but " + std::to_string(cands.size()) +
                       " candidates");
  }
  std::vector<std::vector<std::size_t>> cover;
  cover.reserve(cands.size());
  for (const SensorPose& c : cands) {
    std::vector<std::size_t> cells;
    if (world.in_bounds(c.p) && world.is_free_point(c.p)) {
      for (CellIndex ci : sensor_footprint(c, world, spec)) cells.push_back(world.flat(ci));
    }
    cover.push_back(std::move(cells));
  }
  std::vector<std::uint8_t> covered(world.cells().size(), 0);
  std::vector<bool> used(cands.size(), false);
  CameraPlacement out;
  for (int k = 0; k < n_cams; ++k) {
    std::size_t best = cands.size();
    std::size_t best_gain = 0;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      if (used[c]) continue;
      std::size_t gain = 0;
      for (std::size_t cell : cover[c]) gain += covered[cell] ? 0 : 1;
      if (best == cands.size() || gain > best_gain) {
        best = c;
        best_gain = gain;
      }
    }
    used[best] = true;
    for (std::size_t cell : cover[best]) covered[cell] = 1;
    out.poses.push_back(cands[best]);
    out.candidate_index.push_back(best);
    out.gains.push_back(best_gain);
  }
  return out;
}

// ---- coverage loops -----------------------------------------------------

double loop_length(std::span<const Vec2> w) {
  if (w.size() < 2) return 0.0;
  return polyline_length(w) + distance(w.back(), w.front());
}

namespace {

// Line-of-sight shortcutting of a cell path.
std::vector<Vec2> string_pull(const GridWorld& world, const CellMask& mask, const std::vector<Vec2>& pts) {
  if (pts.size() <= 2) return pts;
  std::vector<Vec2> out{pts.front()};
  std::size_t i = 0;
  while (i + 1 < pts.size()) {
    std::size_t j = pts.size() - 1;
    while (j > i + 1 && !segment_in_mask(world, mask, pts[i], pts[j])) --j;
    out.push_back(pts[j]);
    i = j;
  }
  return out;
}

// Interior points of a free-space connection from a to b (excluding both ends).
std::vector<Vec2> connect(const GridWorld& world, const CellMask& buffered, const CellMask& free,
                          Vec2 a, Vec2 b) {
  if (segment_in_mask(world, buffered, a, b)) return {};
  std::vector<Vec2> pts;
  try {
    pts = robot_path(world, buffered, a, b);
    pts = string_pull(world, buffered, pts);
  } catch (const NoPath&) {
    GridPath gp = astar_cells(world, free, world.cell_of(a), world.cell_of(b));
    pts = gp.points;
    pts.front() = a;
    pts.back() = b;
    pts = string_pull(world, free, pts);
  }
  if (pts.size() <= 2) return {};
  return {pts.begin() + 1, pts.end() - 1};
}

void push_unique(std::vector<Vec2>& v, Vec2 p) {
  if (v.empty() || !(v.back() == p)) v.push_back(p);
}

}  // namespace

McppPlan mcpp_plan(const GridWorld& world, int n_robots, const McppParams& params,
                   std::span<const Vec2> robot_positions) {
  if (n_robots < 1) throw ConfigError("mcpp needs at least one robot");
  const double cs = world.cell_size();
  const int fine = std::max(2, static_cast<int>(std::lround(params.pitch_m / cs)));
  const int half = fine / 2;
  const int ncx = (world.width_cells() + fine - 1) / fine;
  const int ncy = (world.height_cells() + fine - 1) / fine;
  const CellMask free = buffered_mask(world, 0.0);
  const CellMask buffered = buffered_mask(world, params.buffer_m);

  auto coarse_id = [&](int I, int J) { return J * ncx + I; };
  std::vector<std::uint8_t> included(static_cast<std::size_t>(ncx) * ncy, 0);
  for (int j = 0; j < world.height_cells(); ++j) {
    for (int i = 0; i < world.width_cells(); ++i) {
      if (world.is_free(i, j)) included[coarse_id(i / fine, j / fine)] = 1;
    }
  }
  // Coarse cells are adjacent when free cells touch across their border.
  auto adjacent = [&](int I, int J, int dI, int dJ) {
    const int I2 = I + dI;
    const int J2 = J + dJ;
    if (I2 < 0 || J2 < 0 || I2 >= ncx || J2 >= ncy) return false;
    if (!included[coarse_id(I, J)] || !included[coarse_id(I2, J2)]) return false;
    for (int k = 0; k < fine; ++k) {
      int i1, j1, i2, j2;
      if (dI != 0) {
        i1 = dI > 0 ? I * fine + fine - 1 : I * fine;
        i2 = i1 + dI;
        j1 = j2 = J * fine + k;
      } else {
        j1 = dJ > 0 ? J * fine + fine - 1 : J * fine;
        j2 = j1 + dJ;
        i1 = i2 = I * fine + k;
      }
      if (world.is_free(i1, j1) && world.is_free(i2, j2)) return true;
    }
    return false;
  };

  // Spanning tree by breadth-first search from the lowest included cell.
  const int n_coarse = ncx * ncy;
  std::vector<int> parent(n_coarse, -2);
  int root = -1;
  for (int c = 0; c < n_coarse && root < 0; ++c) {
    if (included[c]) root = c;
  }
  if (root < 0) throw GenerationFailed("map has no free cells to cover");
  std::vector<std::pair<int, int>> tree;
  std::deque<int> queue{root};
  parent[root] = -1;
  constexpr int dI[] = {1, 0, -1, 0};
  constexpr int dJ[] = {0, 1, 0, -1};
  while (!queue.empty()) {
    const int c = queue.front();
    queue.pop_front();
    const int I = c % ncx;
    const int J = c / ncx;
    for (int k = 0; k < 4; ++k) {
      if (!adjacent(I, J, dI[k], dJ[k])) continue;
      const int nb = coarse_id(I + dI[k], J + dJ[k]);
      if (parent[nb] != -2) continue;
      parent[nb] = c;
      tree.push_back({c, nb});
      queue.push_back(nb);
    }
  }

  // Sub-cell cycle: each coarse cell starts as a 4-cycle of its sub-cells;
  // each tree edge swaps the two facing inner edges for two crossing edges.
  const int nsx = ncx * 2;
  auto sub_id = [&](int si, int sj) { return sj * nsx + si; };
  std::vector<std::vector<int>> nbrs(static_cast<std::size_t>(nsx) * ncy * 2);
  auto link = [&](int a, int b) {
    nbrs[a].push_back(b);
    nbrs[b].push_back(a);
  };
  auto unlink = [&](int a, int b) {
    std::erase(nbrs[a], b);
    std::erase(nbrs[b], a);
  };
  for (int c = 0; c < n_coarse; ++c) {
    if (parent[c] == -2) continue;
    const int si = (c % ncx) * 2;
    const int sj = (c / ncx) * 2;
    const int bl = sub_id(si, sj), br = sub_id(si + 1, sj);
    const int tl = sub_id(si, sj + 1), tr = sub_id(si + 1, sj + 1);
    link(bl, br);
    link(br, tr);
    link(tr, tl);
    link(tl, bl);
  }
  for (auto [a, b] : tree) {
    const int lo = std::min(a, b);
    const int hi = std::max(a, b);
    const int si = (lo % ncx) * 2;
    const int sj = (lo / ncx) * 2;
    if (hi == lo + 1) {  // horizontal neighbours
      const int a_br = sub_id(si + 1, sj), a_tr = sub_id(si + 1, sj + 1);
      const int b_bl = sub_id(si + 2, sj), b_tl = sub_id(si + 2, sj + 1);
      unlink(a_br, a_tr);
      unlink(b_bl, b_tl);
      link(a_br, b_bl);
      link(a_tr, b_tl);
    } else {  // vertical neighbours
      const int a_tl = sub_id(si, sj + 1), a_tr = sub_id(si + 1, sj + 1);
      const int b_bl = sub_id(si, sj + 2), b_br = sub_id(si + 1, sj + 2);
      unlink(a_tl, a_tr);
      unlink(b_bl, b_br);
      link(a_tl, b_bl);
      link(a_tr, b_br);
    }
  }
  std::vector<int> cycle;
  {
    const int start = sub_id((root % ncx) * 2, (root / ncx) * 2);
    int prev = -1;
    int cur = start;
    do {
      cycle.push_back(cur);
      const auto& nb = nbrs[cur];
      const int next = (nb.size() == 2 && nb[0] == prev) ? nb[1] : nb[0];
      prev = cur;
      cur = next;
    } while (cur != start && cycle.size() <= nbrs.size());
  }

  // Representative point per sub-cell: buffered cell nearest its centre.
  auto representative = [&](int s) -> std::optional<Vec2> {
    const int si = s % nsx;
    const int sj = s / nsx;
    const Vec2 centre{(si * half + half / 2.0) * cs, (sj * half + half / 2.0) * cs};
    std::optional<Vec2> best;
    double best_d = 0.0;
    for (int j = sj * half; j < sj * half + half; ++j) {
      for (int i = si * half; i < si * half + half; ++i) {
        if (!world.in_grid(i, j) || !buffered[world.flat(i, j)]) continue;
        const Vec2 q = world.cell_center({i, j});
        const double d = distance(q, centre);
        if (!best || d < best_d) {
          best = q;
          best_d = d;
        }
      }
    }
    return best;
  };
  std::vector<Vec2> anchors;
  for (int s : cycle) {
    if (auto p = representative(s)) push_unique(anchors, *p);
  }
  while (anchors.size() > 1 && anchors.back() == anchors.front()) anchors.pop_back();
  if (anchors.empty()) throw GenerationFailed("no buffered cell to place coverage waypoints");

  // Dense closed cycle through free space.
  std::vector<Vec2> ring;
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    push_unique(ring, anchors[k]);
    if (anchors.size() == 1) break;
    const Vec2 next = anchors[(k + 1) % anchors.size()];
    for (Vec2 p : connect(world, buffered, free, anchors[k], next)) push_unique(ring, p);
  }
  while (ring.size() > 1 && ring.back() == ring.front()) ring.pop_back();

  McppPlan plan;
  const int n = std::min<int>(n_robots, static_cast<int>(ring.size()));
  if (n <= 1) {
    plan.loops.push_back({ring, 0, loop_length(ring)});
  } else {
    std::vector<double> cum(ring.size() + 1, 0.0);
    for (std::size_t k = 0; k < ring.size(); ++k) {
      cum[k + 1] = cum[k] + distance(ring[k], ring[(k + 1) % ring.size()]);
    }
    const double total = cum.back();
    std::vector<std::size_t> cut{0};
    for (int k = 1; k < n; ++k) {
      const double target = total * k / n;
      std::size_t best = cut.back() + 1;
      for (std::size_t i = best; i < ring.size(); ++i) {
        if (std::abs(cum[i] - target) < std::abs(cum[best] - target)) best = i;
      }
      const std::size_t remaining_cuts = static_cast<std::size_t>(n - k);
      best = std::min(best, ring.size() - remaining_cuts);
      cut.push_back(best);
    }
    cut.push_back(ring.size());
    for (int k = 0; k < n; ++k) {
      std::vector<Vec2> w;
      for (std::size_t i = cut[k]; i <= cut[k + 1]; ++i) push_unique(w, ring[i % ring.size()]);
      if (w.size() > 1) {
        for (Vec2 p : connect(world, buffered, free, w.back(), w.front())) push_unique(w, p);
      }
      while (w.size() > 1 && w.back() == w.front()) w.pop_back();
      plan.loops.push_back({w, k, loop_length(w)});
    }
  }
  for (int k = n; k < n_robots; ++k) plan.loops.push_back(plan.loops[k % n]);

  // Greedy robot-to-loop assignment by distance.
  if (!robot_positions.empty()) {
    const std::size_t nr = std::min(robot_positions.size(), plan.loops.size());
    std::vector<bool> robot_done(robot_positions.size(), false);
    std::vector<bool> loop_done(plan.loops.size(), false);
    for (std::size_t round = 0; round < nr; ++round) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t br = 0, bl = 0;
      for (std::size_t r = 0; r < robot_positions.size(); ++r) {
        if (robot_done[r]) continue;
        for (std::size_t l = 0; l < plan.loops.size(); ++l) {
          if (loop_done[l]) continue;
          double d = std::numeric_limits<double>::infinity();
          for (Vec2 w : plan.loops[l].waypoints) d = std::min(d, distance(w, robot_positions[r]));
          if (d < best) {
            best = d;
            br = r;
            bl = l;
          }
        }
      }
      robot_done[br] = loop_done[bl] = true;
      plan.loops[bl].robot = static_cast<int>(br);
    }
  }

  // Coverage by distance to the nearest waypoint.
  std::size_t n_free = 0;
  std::size_t n_cov = 0;
  const double r2 = params.range_m * params.range_m;
  for (int j = 0; j < world.height_cells(); ++j) {
    for (int i = 0; i < world.width_cells(); ++i) {
      if (!world.is_free(i, j)) continue;
      ++n_free;
      const Vec2 c = world.cell_center({i, j});
      bool ok = false;
      for (const CoverageLoop& l : plan.loops) {
        for (Vec2 w : l.waypoints) {
          const Vec2 d = w - c;
          if (dot(d, d) <= r2) {
            ok = true;
            break;
          }
        }
        if (ok) break;
      }
      if (ok) {
        ++n_cov;
      } else {
        plan.gap_cells.push_back({i, j});
      }
    }
  }
  plan.coverage = n_free == 0 ? 1.0 : static_cast<double>(n_cov) / static_cast<double>(n_free);
  return plan;
}

void require_coverage(const McppPlan& plan) {
  if (!plan.gap_cells.empty()) {
    throw CoverageGap(std::to_string(plan.gap_cells.size()) + " free cells beyond sensing range of every loop");
  }
}

// ---- persistent monitoring LP --------------------------------------------

std::vector<double> segment_lengths(const CoverageLoop& loop) {
  const auto& w = loop.waypoints;
  std::vector<double> out;
  if (w.size() < 2) return out;
  for (std::size_t k = 0; k < w.size(); ++k) out.push_back(distance(w[k], w[(k + 1) % w.size()]));
  return out;
}

PmSolution pm_speeds(std::span<const double> len, double v_max, const PmConstraints& con) {
  if (!(v_max > 0.0)) throw ConfigError("v_max must be positive");
  const std::size_t n = len.size();
  if (n == 0) throw ConfigError("loop has no segments");
  if (!con.caps.empty() && con.caps.size() != n) throw ShapeMismatch("one speed cap per segment");
  std::vector<double> top(n, v_max);
  for (std::size_t k = 0; k < con.caps.size(); ++k) {
    if (!(con.caps[k] > 0.0)) throw Infeasible("segment " + std::to_string(k) + " has a nonpositive cap");
    top[k] = std::min(v_max, con.caps[k]);
  }
  // Variables x_k = u_k - 1/top_k >= 0, with pace u_k = 1 / s_k.
  std::vector<double> lb(n);
  double base = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    lb[k] = 1.0 / top[k];
    base += len[k] * lb[k];
  }
  std::vector<LinearConstraint> rows;
  for (const PmRegion& r : con.regions) {
    LinearConstraint c;
    c.a.assign(n, 0.0);
    double fixed = 0.0;
    for (int k : r.segments) {
      if (k < 0 || static_cast<std::size_t>(k) >= n) throw ShapeMismatch("region segment out of range");
      c.a[k] += len[k];
      fixed += len[k] * lb[k];
    }
    c.rel = Relation::GreaterEq;
    c.b = r.min_time_s - fixed;
    if (c.b > 0.0) rows.push_back(std::move(c));
  }
  if (std::isfinite(con.max_period_s)) {
    LinearConstraint c;
    c.a.assign(len.begin(), len.end());
    c.rel = Relation::LessEq;
    c.b = con.max_period_s - base;
    if (c.b < -1e-9) throw Infeasible("period bound below the fastest traversal");
    c.b = std::max(c.b, 0.0);
    rows.push_back(std::move(c));
  }
  PmSolution sol;
  sol.speeds = top;
  if (!rows.empty()) {
    const LpResult lp = solve_lp(std::vector<double>(len.begin(), len.end()), rows);
    if (lp.status != LpResult::Status::Optimal) throw Infeasible("latency constraints conflict with v_max");
    for (std::size_t k = 0; k < n; ++k) {
      if (lp.x[k] > 0.0) sol.speeds[k] = 1.0 / (lb[k] + lp.x[k]);
    }
  }
  for (std::size_t k = 0; k < n; ++k) sol.period_s += len[k] / sol.speeds[k];
  return sol;
}

std::vector<PmSolution> pm_speeds(const std::vector<CoverageLoop>& loops, double v_max,
                                  const std::vector<PmConstraints>& constraints) {
  if (loops.empty()) throw ConfigError("no loops");
  std::vector<PmSolution> out;
  for (std::size_t l = 0; l < loops.size(); ++l) {
    const auto len = segment_lengths(loops[l]);
    out.push_back(pm_speeds(len, v_max, l < constraints.size() ? constraints[l] : PmConstraints{}));
  }
  return out;
}

// Seconds lost at the start of each segment: turning in place at the
// steering rate, plus braking to a stop and re-accelerating when the turn is
// too sharp to take on the move.
std::vector<double> turn_overheads(const CoverageLoop& loop, const EnvParams& params) {
  const auto& w = loop.waypoints;
  const std::size_t n = w.size();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  const double omega = std::abs(params.actions.delta[2]);
  auto heading = [&](std::size_t k) {
    const Vec2 d = w[(k + 1) % n] - w[k];
    return std::atan2(d.y, d.x);
  };
  for (std::size_t k = 0; k < n; ++k) {
    const double phi = std::abs(wrap_pi(heading(k) - heading((k + n - 1) % n)));
    double t = phi / omega;
    if (phi > kPi / 4.0 + 1e-9) t += params.v_max / params.a_max;
    out[k] = t;
  }
  return out;
}

std::vector<double> kinematic_caps(const CoverageLoop& loop, const EnvParams& params) {
  const auto len = segment_lengths(loop);
  const auto over = turn_overheads(loop, params);
  std::vector<double> caps(len.size());
  for (std::size_t k = 0; k < len.size(); ++k) {
    caps[k] = len[k] / (len[k] / params.v_max + over[k]);
  }
  return caps;
}

// ---- planners -------------------------------------------------------------

void WaypointSamplingPlanner::reset(const GridWorld& world, std::span<const AgentState> robots,
                                    const EnvParams& params, std::uint64_t seed) {
  world_ = &world;
  params_ = params;
  buffered_ = buffered_mask(world, options_.buffer_m);
  goal_cells_.clear();
  for (std::size_t k = 0; k < buffered_.size(); ++k) {
    if (buffered_[k]) goal_cells_.push_back(world.unflat(k));
  }
  if (goal_cells_.empty()) throw NoPath("no buffered free cell for waypoints");
  rng_ = Rng(seed);
  goals_.assign(robots.size(), Vec2{});
  trackers_.assign(robots.size(), PathTracker{});
  stalled_.assign(robots.size(), 0);
  for (std::size_t r = 0; r < robots.size(); ++r) new_goal(r, robots[r].p);
}

void WaypointSamplingPlanner::new_goal(std::size_t r, Vec2 from) {
  for (int attempt = 0; attempt < 50; ++attempt) {
    const CellIndex c = goal_cells_[uniform_index(rng_, goal_cells_.size())];
    const Vec2 g = world_->cell_center(c);
    if (distance(g, from) <= options_.arrive_m) continue;
    try {
      trackers_[r] = PathTracker(robot_path(*world_, buffered_, from, g), false, options_.lookahead_m);
      goals_[r] = g;
      return;
    } catch (const NoPath&) {
    }
  }
  trackers_[r] = PathTracker({from}, false, options_.lookahead_m);
  goals_[r] = from;
}

std::vector<ActionCommand> WaypointSamplingPlanner::act(int, std::span<const AgentState> robots,
                                                        std::span<const LocalObservation>) {
  std::vector<ActionCommand> out;
  out.reserve(robots.size());
  for (std::size_t r = 0; r < robots.size(); ++r) {
    const AgentState& s = robots[r];
    stalled_[r] = s.v == 0.0 ? stalled_[r] + 1 : 0;
    if (trackers_[r].arrived(s.p, options_.arrive_m) || distance(s.p, goals_[r]) <= options_.arrive_m) {
      new_goal(r, s.p);
      stalled_[r] = 0;
    } else if (stalled_[r] >= 12) {
      // Stuck against a wall or circling: replan from here.
      new_goal(r, s.p);
      stalled_[r] = 0;
    }
    out.push_back(trackers_[r].act(*world_, s, params_.v_max, params_));
  }
  return out;
}

void LoopPlanner::reset(const GridWorld& world, std::span<const AgentState> robots,
                        const EnvParams& params, std::uint64_t) {
  world_ = &world;
  params_ = params;
  buffered_ = buffered_mask(world, options_.buffer_m);
  const std::size_t n = robots.size();
  loop_of_robot_.assign(n, -1);
  entry_.assign(n, 0);
  approach_.assign(n, PathTracker{});
  loop_tracker_.assign(n, PathTracker{});
  on_loop_.assign(n, false);
  speeds_.clear();
  overhead_.clear();
  if (n == 0) return;
  std::vector<Vec2> pos;
  for (const AgentState& a : robots) pos.push_back(a.p);
  McppParams mp = options_.mcpp;
  mp.range_m = params.tracking.range_m;
  plan_ = mcpp_plan(world, static_cast<int>(n), mp, pos);

  for (std::size_t l = 0; l < plan_.loops.size(); ++l) {
    const CoverageLoop& loop = plan_.loops[l];
    const auto len = segment_lengths(loop);
    const bool kinematic = options_.kind == PlannerKind::PM && options_.pm_kinematic_caps;
    overhead_.push_back(kinematic ? turn_overheads(loop, params) : std::vector<double>(len.size(), 0.0));
    if (options_.kind == PlannerKind::PM && !len.empty()) {
      PmConstraints con = l < options_.pm_constraints.size() ? options_.pm_constraints[l] : PmConstraints{};
      if (kinematic) {
        const auto caps = kinematic_caps(loop, params);
        if (con.caps.empty()) con.caps.assign(len.size(), std::numeric_limits<double>::infinity());
        for (std::size_t k = 0; k < caps.size(); ++k) con.caps[k] = std::min(con.caps[k], caps[k]);
      }
      speeds_.push_back(pm_speeds(len, params.v_max, con));
    } else {
      PmSolution s;
      s.speeds.assign(len.size(), params.v_max);
      for (double L : len) s.period_s += L / params.v_max;
      speeds_.push_back(std::move(s));
    }
    if (loop.robot < 0) continue;
    const std::size_t r = static_cast<std::size_t>(loop.robot);
    loop_of_robot_[r] = static_cast<int>(l);
    // Enter the loop at its nearest waypoint.
    std::size_t entry = 0;
    for (std::size_t k = 1; k < loop.waypoints.size(); ++k) {
      if (distance(loop.waypoints[k], pos[r]) < distance(loop.waypoints[entry], pos[r])) entry = k;
    }
    std::vector<Vec2> rotated;
    for (std::size_t k = 0; k < loop.waypoints.size(); ++k) {
      rotated.push_back(loop.waypoints[(entry + k) % loop.waypoints.size()]);
    }
    entry_[r] = entry;
    loop_tracker_[r] = PathTracker(rotated, true, options_.lookahead_m);
    loop_tracker_[r].start();
    try {
      approach_[r] = PathTracker(robot_path(world, buffered_, pos[r], rotated.front()), false,
                                 options_.lookahead_m);
    } catch (const NoPath&) {
      approach_[r] = PathTracker{};
    }
  }
}

double LoopPlanner::cruise_speed(std::size_t l, std::size_t k) const {
  const auto& w = plan_.loops[l].waypoints;
  const double len = distance(w[k], w[(k + 1) % w.size()]);
  const double s = speeds_[l].speeds[k];
  const double budget = len / s - overhead_[l][k];
  if (budget <= 0.0) return params_.v_max;
  return std::min(params_.v_max, len / budget);
}

std::vector<ActionCommand> LoopPlanner::act(int, std::span<const AgentState> robots,
                                            std::span<const LocalObservation>) {
  std::vector<ActionCommand> out;
  out.reserve(robots.size());
  for (std::size_t r = 0; r < robots.size(); ++r) {
    const int l = loop_of_robot_[r];
    if (l < 0) {
      out.push_back({0, 1});
      continue;
    }
    if (!on_loop_[r]) {
      if (approach_[r].empty() || approach_[r].arrived(robots[r].p, options_.arrive_m)) {
        on_loop_[r] = true;
      } else {
        out.push_back(approach_[r].act(*world_, robots[r], params_.v_max, params_));
        continue;
      }
    }
    const std::size_t n_seg = plan_.loops[l].waypoints.size();
    const std::size_t entry = entry_[r];
    auto speed = [&](std::size_t seg) { return cruise_speed(l, (seg + entry) % n_seg); };
    out.push_back(loop_tracker_[r].act(*world_, robots[r], speed, params_));
  }
  return out;
}

std::vector<ActionCommand> loop_follow_act(LoopPlanner& planner, int t, std::span<const AgentState> robots) {
  return planner.act(t, robots, {});
}

std::unique_ptr<Planner> make_planner(const PlannerOptions& options) {
  switch (options.kind) {
    case PlannerKind::FC: return std::make_unique<FixedCameraPlanner>();
    case PlannerKind::WS: return std::make_unique<WaypointSamplingPlanner>(options);
    case PlannerKind::MCPP:
    case PlannerKind::PM: return std::make_unique<LoopPlanner>(options);
    case PlannerKind::External: break;
  }
  throw ConfigError("external planners are served over the bridge");
}

}  // namespace coopmon
