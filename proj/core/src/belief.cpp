#include "coopmon/belief.hpp"

#include <cmath>
#include <limits>

#include "coopmon/errors.hpp"

namespace coopmon {

const char* task_name(Task task) {
  switch (task) {
    case Task::Tracking: return "tracking";
    case Task::Occupancy: return "occupancy";
    case Task::Flow: return "flow";
  }
  return "?";
}

Task parse_task(const std::string& name) {
  for (Task t : kAllTasks) {
    if (name == task_name(t)) return t;
  }
  throw ConfigError("unknown task '" + name + "'");
}

PositionBelief init_belief(const GridWorld& world, std::span<const Vec2> initial, BeliefInit mode) {
  PositionBelief b;
  if (mode == BeliefInit::Informed) {
    b.p.assign(initial.begin(), initial.end());
    b.last_seen.assign(initial.size(), 0);
  } else {
    b.p.assign(initial.size(), world.center());
    b.last_seen.assign(initial.size(), -1);
  }
  return b;
}

FlowBelief init_flow_belief(const GridWorld& world, std::span<const Vec2> initial, BeliefInit mode) {
  FlowBelief b;
  const std::size_t m = initial.size();
  b.zones = world.zone_count();
  b.prev_zone.assign(m, std::nullopt);
  b.cur_zone.assign(m, std::nullopt);
  b.tau.assign(m, -1);
  b.flow.assign(static_cast<std::size_t>(b.zones) * b.zones, 0);
  if (mode == BeliefInit::Informed) {
    for (std::size_t j = 0; j < m; ++j) b.cur_zone[j] = world.zone_of(initial[j]);
  }
  return b;
}

std::vector<double> update_position_belief(PositionBelief& belief, std::span<const int> visible,
                                           std::span<const Vec2> observed, int t) {
  std::vector<double> deltas(belief.p.size(), 0.0);
  for (int j : visible) {
    const Vec2 old = belief.p[j];
    belief.p[j] = observed[j];
    belief.last_seen[j] = t;
    deltas[j] = std::abs(belief.p[j].x - old.x) + std::abs(belief.p[j].y - old.y);
  }
  return deltas;
}

long update_flow_belief(FlowBelief& belief, std::span<const int> visible,
                        std::span<const Vec2> observed, const GridWorld& world, int t) {
  long added = 0;
  for (int j : visible) {
    const std::optional<int> z = world.zone_of(observed[j]);
    if (!z) continue;
    if (!belief.cur_zone[j]) {
      belief.cur_zone[j] = z;
      continue;
    }
    if (*z == *belief.cur_zone[j]) continue;
    belief.prev_zone[j] = belief.cur_zone[j];
    belief.cur_zone[j] = z;
    belief.tau[j] = t;
    ++belief.flow[static_cast<std::size_t>(*belief.prev_zone[j]) * belief.zones + *z];
    ++added;
  }
  return added;
}

std::vector<int> estimate_occupancy(std::span<const Vec2> positions, const GridWorld& world) {
  std::vector<int> counts(static_cast<std::size_t>(world.zone_count()), 0);
  for (Vec2 p : positions) {
    if (const auto z = world.zone_of(p)) ++counts[*z];
  }
  return counts;
}

std::vector<double> task_estimate(Task task, const PositionBelief& pos, const FlowBelief& flow,
                                  const GridWorld& world) {
  std::vector<double> m;
  switch (task) {
    case Task::Tracking:
      m.reserve(pos.p.size() * 2);
      for (Vec2 p : pos.p) {
        m.push_back(p.x);
        m.push_back(p.y);
      }
      break;
    case Task::Occupancy:
      for (int c : estimate_occupancy(pos.p, world)) m.push_back(c);
      break;
    case Task::Flow:
      for (long c : flow.flow) m.push_back(static_cast<double>(c));
      break;
  }
  return m;
}

double reward(Task task, std::span<const double> m_prev, std::span<const double> m_cur,
              const RewardClip& clip) {
  if (m_prev.size() != m_cur.size()) {
    throw ShapeMismatch("estimates have " + std::to_string(m_prev.size()) + " and " +
                        std::to_string(m_cur.size()) + " entries");
  }
  const std::size_t group = task == Task::Tracking ? 2 : 1;
  if (m_cur.size() % group != 0) throw ShapeMismatch("tracking estimate must hold (x, y) pairs");
  double total = 0.0;
  for (std::size_t k = 0; k < m_cur.size(); k += group) {
    double c = 0.0;
    for (std::size_t g = 0; g < group; ++g) c += std::abs(m_cur[k + g] - m_prev[k + g]);
    total += std::min(c, clip.per_component);
  }
  return std::min(total, clip.total);
}

TeamBelief::TeamBelief(const GridWorld& world, std::span<const Vec2> initial, BeliefInit mode)
    : world_(&world),
      position_(init_belief(world, initial, mode)),
      flow_(init_flow_belief(world, initial, mode)) {
  for (Task t : kAllTasks) m_[static_cast<int>(t)] = estimate(t);
}

std::vector<double> TeamBelief::estimate(Task task) const {
  return task_estimate(task, position_, flow_, *world_);
}

std::array<double, 3> TeamBelief::observe(std::span<const int> visible,
                                          std::span<const Vec2> observed, int t,
                                          const RewardClip& clip) {
  update_position_belief(position_, visible, observed, t);
  update_flow_belief(flow_, visible, observed, *world_, t);
  std::array<double, 3> r{};
  for (Task task : kAllTasks) {
    auto& prev = m_[static_cast<int>(task)];
    std::vector<double> cur = estimate(task);
    r[static_cast<int>(task)] = reward(task, prev, cur, clip);
    prev = std::move(cur);
  }
  return r;
}

std::vector<long> true_flow(std::span<const std::vector<Vec2>> positions_by_t, const GridWorld& world) {
  const int z = world.zone_count();
  std::vector<long> flow(static_cast<std::size_t>(z) * z, 0);
  if (positions_by_t.empty()) return flow;
  const std::size_t m = positions_by_t.front().size();
  std::vector<std::optional<int>> cur(m);
  for (const auto& step : positions_by_t) {
    for (std::size_t j = 0; j < m; ++j) {
      const auto zone = world.zone_of(step[j]);
      if (!zone) continue;
      if (cur[j] && *cur[j] != *zone) ++flow[static_cast<std::size_t>(*cur[j]) * z + *zone];
      cur[j] = zone;
    }
  }
  return flow;
}

namespace {

void check_aligned(std::span<const std::vector<Vec2>> a, std::span<const std::vector<Vec2>> b) {
  if (a.size() != b.size()) throw ShapeMismatch("traces differ in length");
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].size() != b[t].size()) throw ShapeMismatch("traces differ in human count");
  }
}

}  // namespace

double tracking_error(std::span<const std::vector<Vec2>> belief_by_t,
                      std::span<const std::vector<Vec2>> truth_by_t) {
  check_aligned(belief_by_t, truth_by_t);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < belief_by_t.size(); ++t) {
    for (std::size_t j = 0; j < belief_by_t[t].size(); ++j) {
      sum += distance(belief_by_t[t][j], truth_by_t[t][j]);
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double occupancy_error(std::span<const std::vector<Vec2>> belief_by_t,
                       std::span<const std::vector<Vec2>> truth_by_t, const GridWorld& world) {
  check_aligned(belief_by_t, truth_by_t);
  if (belief_by_t.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t t = 0; t < belief_by_t.size(); ++t) {
    const auto est = estimate_occupancy(belief_by_t[t], world);
    const auto truth = estimate_occupancy(truth_by_t[t], world);
    for (std::size_t z = 0; z < est.size(); ++z) sum += std::abs(est[z] - truth[z]);
  }
  return sum / static_cast<double>(belief_by_t.size());
}

double flow_error(std::span<const long> final_flow, std::span<const std::vector<Vec2>> truth_by_t,
                  const GridWorld& world) {
  const auto truth = true_flow(truth_by_t, world);
  if (truth.size() != final_flow.size()) throw ShapeMismatch("flow matrices differ in size");
  double sum = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    sum += static_cast<double>(std::abs(final_flow[k] - truth[k]));
  }
  return sum;
}

}  // namespace coopmon
