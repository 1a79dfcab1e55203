#include "coopmon/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "coopmon/errors.hpp"
#include "coopmon/navigation.hpp"

namespace coopmon {

void check_env_params(const EnvParams& p) {
  if (!(p.dt > 0.0)) throw ConfigError("dt must be positive");
  if (p.horizon < 0) throw ConfigError("horizon must be nonnegative");
  if (p.n_robots < 0) throw ConfigError("n_robots must be nonnegative");
  if (p.n_robots == 0 && p.cameras.empty()) throw ConfigError("need at least one robot or camera");
  if (!(p.v_max > 0.0) || !(p.a_max > 0.0)) throw ConfigError("v_max and a_max must be positive");
  check_sensor(p.tracking);
  check_sensor(p.lidar);
  check_sensor(p.camera);
  if (p.noise.sigma_p < 0 || p.noise.sigma_theta < 0 || p.noise.sigma_v < 0) {
    throw ConfigError("noise sigmas must be nonnegative");
  }
  for (double v : p.actions.v) {
    if (v < 0.0 || v > p.v_max) throw ConfigError("speed commands must lie in [0, v_max]");
  }
}

AgentState kinematics_step(const AgentState& state, ActionCommand action, const EnvParams& params,
                           const GridWorld& world) {
  if (action.v_idx < 0 || action.v_idx > 2 || action.delta_idx < 0 || action.delta_idx > 2) {
    throw ShapeMismatch("action index outside {0, 1, 2}");
  }
  const double dt = params.dt;
  const double v_cmd = params.actions.v[action.v_idx];
  const double delta = params.actions.delta[action.delta_idx];
  AgentState next = state;
  next.lidar.reset();
  next.theta = wrap_angle(state.theta + delta * dt);
  const double heading = params.post_update_heading ? next.theta : state.theta;
  next.p = {state.p.x + state.v * std::cos(heading) * dt, state.p.y + state.v * std::sin(heading) * dt};
  const double dv = std::clamp(v_cmd - state.v, -params.a_max * dt, params.a_max * dt);
  next.v = std::clamp(state.v + dv, 0.0, params.v_max);
  if (!(next.p == state.p)) {
    bool blocked = !world.in_bounds(next.p);
    if (!blocked) {
      for (CellIndex c : traverse_segment(world, state.p, next.p)) {
        if (!world.is_free(c)) {
          blocked = true;
          break;
        }
      }
    }
    if (blocked) {
      next.p = state.p;
      next.v = 0.0;
    }
  }
  return next;
}

std::vector<AgentState> spawn_robots(const GridWorld& world, int n, double separation_m, Rng& rng) {
  std::vector<CellIndex> free;
  for (int j = 0; j < world.height_cells(); ++j) {
    for (int i = 0; i < world.width_cells(); ++i) {
      if (world.is_free(i, j)) free.push_back({i, j});
    }
  }
  if (n > 0 && free.empty()) throw SpawnFailed("map has no free cell");
  std::vector<AgentState> robots;
  constexpr int kAttempts = 1000;
  for (int r = 0; r < n; ++r) {
    bool placed = false;
    for (int a = 0; a < kAttempts && !placed; ++a) {
      const Vec2 p = world.cell_center(free[uniform_index(rng, free.size())]);
      bool ok = true;
      for (const AgentState& o : robots) {
        if (distance(o.p, p) < separation_m) ok = false;
      }
      if (!ok) continue;
      AgentState s;
      s.p = p;
      s.theta = uniform(rng, 0.0, kTwoPi);
      robots.push_back(s);
      placed = true;
    }
    if (!placed) {
      throw SpawnFailed("cannot place robot " + std::to_string(r) + " at " +
                        std::to_string(separation_m) + " m separation");
    }
  }
  return robots;
}

std::vector<Pose> SimState::humans() const { return crowd_at(*crowd_, t_); }

void SimState::sense(StepInfo& info) {
  const GridWorld& world = *world_;
  info.humans = humans();
  const std::size_t m = info.humans.size();
  const std::size_t n = robots_.size();
  info.robot_visibility.assign(n, std::vector<std::uint8_t>(m, 0));
  info.camera_visibility.assign(m, 0);
  belief_input_.assign(m, Vec2{});
  std::vector<std::uint8_t> fed(m, 0);

  for (std::size_t r = 0; r < n; ++r) {
    robots_[r].lidar = lidar_scan(robots_[r].pose(), world, params_.lidar);
  }
  last_obs_.assign(n, {});
  for (std::size_t r = 0; r < n; ++r) {
    LocalObservation& o = last_obs_[r];
    o.ego = robots_[r];
    for (std::size_t q = 0; q < n; ++q) {
      if (q != r) o.peers.push_back({robots_[q].p, robots_[q].theta, robots_[q].v});
    }
    const auto vis = visible_set(robots_[r].pose(), info.humans, world, params_.tracking);
    for (int j : vis) {
      const HumanMeasurement meas = noisy_measurement(info.humans[j], noise_rng_, params_.noise);
      o.humans.push_back({static_cast<int>(o.humans.size()), meas});
      info.robot_visibility[r][j] = 1;
      if (!fed[j]) {
        fed[j] = 1;
        belief_input_[j] = params_.deployment_mode ? meas.p : info.humans[j].p;
      }
    }
  }
  for (const SensorPose& cam : params_.cameras) {
    for (int j : visible_set(cam, info.humans, world, params_.camera)) {
      info.camera_visibility[j] = 1;
      Vec2 p = info.humans[j].p;
      if (params_.deployment_mode) p = noisy_measurement(info.humans[j], noise_rng_, params_.noise).p;
      if (!fed[j]) {
        fed[j] = 1;
        belief_input_[j] = p;
      }
    }
  }
  info.union_visible.clear();
  for (std::size_t j = 0; j < m; ++j) {
    if (fed[j]) info.union_visible.push_back(static_cast<int>(j));
  }
}

std::pair<SimState, std::vector<LocalObservation>> SimState::reset(
    std::shared_ptr<const GridWorld> world, std::shared_ptr<const std::vector<HumanPlan>> crowd,
    const EnvParams& params, std::uint64_t seed) {
  check_env_params(params);
  for (const HumanPlan& h : *crowd) {
    if (static_cast<int>(h.trajectory.size()) < params.horizon + 1) {
      throw ConfigError("crowd trajectories shorter than the horizon");
    }
  }
  SimState s;
  s.world_ = std::move(world);
  s.crowd_ = std::move(crowd);
  s.params_ = params;
  s.seed_ = seed;
  s.noise_rng_ = make_rng(seed, Stream::SensorNoise);
  Rng spawn_rng = make_rng(seed, Stream::Spawn);
  s.robots_ = spawn_robots(*s.world_, params.n_robots, params.spawn_separation_m, spawn_rng);
  std::vector<Vec2> initial;
  for (const Pose& h : s.humans()) initial.push_back(h.p);
  s.belief_ = TeamBelief(*s.world_, initial, params.belief_init);
  StepInfo info;
  s.sense(info);
  // The t = 0 observation updates the belief but earns no reward.
  info.task_rewards = s.belief_.observe(info.union_visible, s.belief_input_, 0, params.clip);
  info.task_rewards = {};
  s.last_info_ = std::move(info);
  auto obs = s.last_obs_;
  return {std::move(s), std::move(obs)};
}

StepResult SimState::step(std::span<const ActionCommand> actions) {
  if (done()) throw EpisodeFinished("step called at t = " + std::to_string(t_));
  if (actions.size() != robots_.size()) {
    throw ShapeMismatch("expected " + std::to_string(robots_.size()) + " actions, got " +
                        std::to_string(actions.size()));
  }
  std::vector<AgentState> next;
  next.reserve(robots_.size());
  for (std::size_t r = 0; r < robots_.size(); ++r) {
    next.push_back(kinematics_step(robots_[r], actions[r], params_, *world_));
  }
  robots_ = std::move(next);
  ++t_;
  StepResult out;
  sense(out.info);
  out.info.task_rewards = belief_.observe(out.info.union_visible, belief_input_, t_, params_.clip);
  out.reward = out.info.task_rewards[static_cast<int>(params_.task)];
  out.done = done();
  out.observations = last_obs_;
  last_info_ = out.info;
  return out;
}

double EpisodeRecord::error(Task t) const {
  switch (t) {
    case Task::Tracking: return metrics.tracking_error;
    case Task::Occupancy: return metrics.occupancy_error;
    case Task::Flow: return metrics.flow_error;
  }
  return 0.0;
}

namespace {

std::vector<Pose> poses_of(const std::vector<AgentState>& robots) {
  std::vector<Pose> out;
  out.reserve(robots.size());
  for (const AgentState& a : robots) out.push_back({a.p, a.theta, a.v});
  return out;
}

std::vector<int> indices_of(const std::vector<std::uint8_t>& flags) {
  std::vector<int> out;
  for (std::size_t j = 0; j < flags.size(); ++j) {
    if (flags[j]) out.push_back(static_cast<int>(j));
  }
  return out;
}

void log_step(EpisodeRecord& rec, const SimState& sim, const StepInfo& info) {
  rec.robots.push_back(poses_of(sim.robots()));
  rec.humans.push_back(info.humans);
  std::vector<std::vector<int>> per_robot;
  for (const auto& row : info.robot_visibility) per_robot.push_back(indices_of(row));
  rec.robot_visible.push_back(std::move(per_robot));
  rec.camera_visible.push_back(indices_of(info.camera_visibility));
  rec.union_visible.push_back(info.union_visible);
  rec.belief_input.push_back(sim.belief_input());
  rec.belief.push_back(sim.belief().position().p);
}

}  // namespace

EpisodeMetrics compute_metrics(const EpisodeRecord& rec, const GridWorld& world) {
  std::vector<std::vector<Vec2>> truth;
  truth.reserve(rec.humans.size());
  for (const auto& step : rec.humans) {
    std::vector<Vec2> ps;
    ps.reserve(step.size());
    for (const Pose& h : step) ps.push_back(h.p);
    truth.push_back(std::move(ps));
  }
  EpisodeMetrics m;
  m.tracking_error = tracking_error(rec.belief, truth);
  m.occupancy_error = occupancy_error(rec.belief, truth, world);
  m.flow_error = flow_error(rec.final_flow, truth, world);
  for (const auto& r : rec.rewards) {
    for (int k = 0; k < 3; ++k) m.total_reward[k] += r[k];
  }
  return m;
}

EpisodeRecord run_episode(std::shared_ptr<const GridWorld> world,
                          std::shared_ptr<const std::vector<HumanPlan>> crowd,
                          const EnvParams& params, Planner& planner, std::uint64_t seed) {
  auto [sim, obs] = SimState::reset(world, crowd, params, seed);
  EpisodeRecord rec;
  rec.seed = seed;
  rec.task = params.task;
  rec.horizon = params.horizon;
  rec.dt = params.dt;
  rec.n_robots = params.n_robots;
  rec.deployment_mode = params.deployment_mode;
  rec.cameras = params.cameras;
  log_step(rec, sim, sim.last_info());
  planner.reset(*world, sim.robots(), params, derive_seed(seed, static_cast<std::uint64_t>(Stream::Planner)));
  while (!sim.done()) {
    std::vector<ActionCommand> actions = planner.act(sim.t(), sim.robots(), obs);
    StepResult res = sim.step(actions);
    rec.actions.push_back(std::move(actions));
    rec.rewards.push_back(res.info.task_rewards);
    log_step(rec, sim, res.info);
    obs = std::move(res.observations);
  }
  rec.final_flow = sim.belief().flow().flow;
  rec.metrics = compute_metrics(rec, *world);
  return rec;
}

namespace {

nlohmann::json pose_json(const Pose& p) { return {p.p.x, p.p.y, p.theta, p.v}; }

}  // namespace

std::string record_to_string(const EpisodeRecord& rec) {
  using nlohmann::json;
  json j;
  j["format"] = "coopmon-episode";
  j["version"] = 1;
  j["seed"] = rec.seed;
  j["task"] = task_name(rec.task);
  j["horizon"] = rec.horizon;
  j["dt"] = rec.dt;
  j["n_robots"] = rec.n_robots;
  j["deployment_mode"] = rec.deployment_mode;
  json cams = json::array();
  for (const SensorPose& c : rec.cameras) cams.push_back({c.p.x, c.p.y, c.theta});
  j["cameras"] = cams;
  json steps = json::array();
  for (std::size_t t = 0; t < rec.robots.size(); ++t) {
    json s;
    s["t"] = t;
    json robots = json::array();
    for (const Pose& p : rec.robots[t]) robots.push_back(pose_json(p));
    s["robots"] = robots;
    json humans = json::array();
    for (const Pose& p : rec.humans[t]) humans.push_back(pose_json(p));
    s["humans"] = humans;
    s["robot_visible"] = rec.robot_visible[t];
    s["camera_visible"] = rec.camera_visible[t];
    s["union_visible"] = rec.union_visible[t];
    json belief = json::array();
    for (Vec2 p : rec.belief[t]) belief.push_back({p.x, p.y});
    s["belief"] = belief;
    if (t > 0) {
      json acts = json::array();
      for (const ActionCommand& a : rec.actions[t - 1]) acts.push_back({a.v_idx, a.delta_idx});
      s["actions"] = acts;
      s["rewards"] = rec.rewards[t - 1];
    }
    steps.push_back(std::move(s));
  }
  j["steps"] = std::move(steps);
  j["final_flow"] = rec.final_flow;
  j["metrics"] = {{"tracking_error", rec.metrics.tracking_error},
                  {"occupancy_error", rec.metrics.occupancy_error},
                  {"flow_error", rec.metrics.flow_error},
                  {"reward_tracking", rec.metrics.total_reward[0]},
                  {"reward_occupancy", rec.metrics.total_reward[1]},
                  {"reward_flow", rec.metrics.total_reward[2]}};
  return j.dump() + "\n";
}

void save_record(const EpisodeRecord& record, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << record_to_string(record);
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace coopmon
