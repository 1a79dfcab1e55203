#include "coopmon/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <future>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "coopmon/errors.hpp"

namespace coopmon {

const char* variant_name(OodVariant v) {
  switch (v) {
    case OodVariant::Default: return "default";
    case OodVariant::Sparse: return "sparse";
    case OodVariant::Crowded: return "crowded";
    case OodVariant::LongDwell: return "long_dwell";
    case OodVariant::Skewed: return "skewed";
  }
  return "?";
}

OodVariant parse_variant(const std::string& name) {
  for (OodVariant v : {OodVariant::Default, OodVariant::Sparse, OodVariant::Crowded,
                       OodVariant::LongDwell, OodVariant::Skewed}) {
    if (name == variant_name(v)) return v;
  }
  throw ConfigError("unknown scenario variant '" + name + "'");
}

int isolated_zone(const GridWorld& world) {
  const int z = world.zone_count();
  if (z <= 1) return 0;
  std::vector<Vec2> anchor(z);
  for (const Zone& zone : world.zones()) {
    anchor[zone.id] = world.rooms()[zone.room_ids.front()].centroid();
  }
  const CellMask free = buffered_mask(world, 0.0);
  std::vector<std::vector<double>> d(z, std::vector<double>(z, 0.0));
  for (int a = 0; a < z; ++a) {
    for (int b = a + 1; b < z; ++b) {
      const GridPath path =
          astar_cells(world, free, world.cell_of(anchor[a]), world.cell_of(anchor[b]));
      d[a][b] = d[b][a] = path.cost_m;
    }
  }
  int best = 0;
  double best_mean = -1.0;
  for (int a = 0; a < z; ++a) {
    const double mean = std::accumulate(d[a].begin(), d[a].end(), 0.0) / (z - 1);
    if (mean > best_mean) {
      best_mean = mean;
      best = a;
    }
  }
  return best;
}

CrowdParams apply_variant(const GridWorld& world, CrowdParams base, OodVariant variant,
                          double skew_multiplier) {
  switch (variant) {
    case OodVariant::Default: break;
    case OodVariant::Sparse: base.m = 10; break;
    case OodVariant::Crowded: base.m = 30; break;
    case OodVariant::LongDwell: base.dwell.mu = std::log(90.0); break;
    case OodVariant::Skewed:
      base.skew = Skew{isolated_zone(world), skew_multiplier};
      base.transition_matrix.reset();
      break;
  }
  return base;
}

std::uint64_t episode_seed(std::uint64_t base_seed, int episode) {
  return derive_seed(base_seed, static_cast<std::uint64_t>(episode));
}

namespace {

nlohmann::json spec_json(const ScenarioSpec& s) {
  using nlohmann::json;
  json j;
  j["map_seed"] = s.map_seed;
  j["map_file"] = s.map_file ? s.map_file->string() : "";
  const MapParams& mp = s.map_params;
  j["map"] = {mp.width_m, mp.height_m, mp.n_rooms, mp.room_size_min_m, mp.room_size_max_m,
              mp.corridor_width_m, mp.cell_size_m, mp.max_placements};
  j["regenerate_map"] = s.regenerate_map;
  const CrowdParams& c = s.crowd;
  j["crowd"] = {c.m, c.dwell.mu, c.dwell.sigma, c.v_max, c.omega_max, c.lookahead_m, c.buffer_m};
  if (c.transition_matrix) j["matrix"] = *c.transition_matrix;
  j["variant"] = variant_name(s.variant);
  j["skew_multiplier"] = s.skew_multiplier;
  j["n_robots"] = s.n_robots;
  j["n_fixed_cams"] = s.n_fixed_cams;
  if (s.camera_poses) {
    json cams = json::array();
    for (const SensorPose& p : *s.camera_poses) cams.push_back({p.p.x, p.p.y, p.theta});
    j["camera_poses"] = cams;
  }
  const PlannerOptions& po = s.planner;
  j["planner"] = {planner_name(po.kind), po.lookahead_m, po.buffer_m, po.arrive_m,
                  po.mcpp.pitch_m, po.mcpp.buffer_m, po.mcpp.range_m, po.pm_kinematic_caps};
  const EnvParams& e = s.env;
  j["env"] = {e.dt, e.horizon, e.v_max, e.a_max, e.spawn_separation_m, e.actions.v, e.actions.delta,
              e.tracking.range_m, e.tracking.fov_rad, e.tracking.k_samples, e.lidar.range_m,
              e.lidar.beams, e.camera.range_m, e.camera.fov_rad, e.camera.k_samples,
              e.noise.sigma_p, e.noise.sigma_theta, e.noise.sigma_v,
              e.belief_init == BeliefInit::Informed, e.clip.per_component, e.clip.total,
              task_name(e.task), e.deployment_mode, e.post_update_heading};
  j["episodes"] = s.episodes;
  j["base_seed"] = s.base_seed;
  if (s.crowd_seed) j["crowd_seed"] = *s.crowd_seed;
  return j;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t crowd_seed_of(const ScenarioSpec& spec, std::uint64_t seed) {
  return spec.crowd_seed ? *spec.crowd_seed
                         : derive_seed(seed, static_cast<std::uint64_t>(Stream::Crowd));
}

// Memoises crowds shared by several configs of one sweep (same world, crowd
// parameters and seed).
class CrowdCache {
 public:
  std::shared_ptr<const std::vector<HumanPlan>> get(const GridWorld& world, const CrowdParams& params,
                                                    int horizon, double dt, std::uint64_t seed) {
    nlohmann::json key = {reinterpret_cast<std::uintptr_t>(&world), params.m, params.dwell.mu,
                          params.dwell.sigma, params.v_max, params.omega_max, params.lookahead_m,
                          params.buffer_m, horizon, dt, seed};
    if (params.transition_matrix) key.push_back(*params.transition_matrix);
    if (params.skew) key.push_back({params.skew->zone, params.skew->multiplier});
    std::promise<std::shared_ptr<const std::vector<HumanPlan>>> promise;
    std::shared_future<std::shared_ptr<const std::vector<HumanPlan>>> future;
    bool owner = false;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = entries_.find(key.dump());
      if (it == entries_.end()) {
        future = promise.get_future().share();
        entries_.emplace(key.dump(), future);
        owner = true;
      } else {
        future = it->second;
      }
    }
    if (owner) {
      try {
        promise.set_value(std::make_shared<const std::vector<HumanPlan>>(
            synthesize_crowd(world, params, horizon, dt, seed)));
      } catch (...) {
        promise.set_exception(std::current_exception());
      }
    }
    return future.get();
  }

 private:
  std::mutex mutex_;
  std::map<std::string, std::shared_future<std::shared_ptr<const std::vector<HumanPlan>>>> entries_;
};

PreparedEpisode prepare(const ScenarioSpec& spec, std::uint64_t seed,
                        std::shared_ptr<const GridWorld> fixed_world, CrowdCache* cache) {
  PreparedEpisode out;
  out.seed = seed;
  if (spec.regenerate_map) {
    out.world = std::make_shared<const GridWorld>(generate_map(
        derive_seed(out.seed, static_cast<std::uint64_t>(Stream::Map)), spec.map_params));
  } else {
    out.world = fixed_world ? std::move(fixed_world) : scenario_world(spec);
  }
  const GridWorld& world = *out.world;

  const CrowdParams crowd = apply_variant(world, spec.crowd, spec.variant, spec.skew_multiplier);
  const std::uint64_t cseed = crowd_seed_of(spec, out.seed);
  // Regenerated worlds are short-lived, so their addresses may repeat.
  if (spec.regenerate_map) cache = nullptr;
  out.crowd = cache ? cache->get(world, crowd, spec.env.horizon, spec.env.dt, cseed)
                    : std::make_shared<const std::vector<HumanPlan>>(
                          synthesize_crowd(world, crowd, spec.env.horizon, spec.env.dt, cseed));

  out.env = spec.env;
  out.planner = spec.planner;
  int n_cams = spec.n_fixed_cams;
  out.env.n_robots = spec.n_robots;
  if (spec.planner.kind == PlannerKind::FC) {
    n_cams += spec.n_robots;
    out.env.n_robots = 0;
  }
  if (spec.camera_poses) {
    out.env.cameras = *spec.camera_poses;
  } else if (n_cams > 0) {
    out.env.cameras = fc_place(world, n_cams, out.env.camera).poses;
  } else {
    out.env.cameras.clear();
  }
  return out;
}

EpisodeRecord run_prepared(const PreparedEpisode& ep) {
  std::unique_ptr<Planner> planner = make_planner(ep.planner);
  return run_episode(ep.world, ep.crowd, ep.env, *planner, ep.seed);
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string config_hash(const ScenarioSpec& spec) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(spec_json(spec).dump())));
  return buf;
}

std::shared_ptr<const GridWorld> scenario_world(const ScenarioSpec& spec) {
  if (spec.map_file) return std::make_shared<const GridWorld>(load_map(*spec.map_file));
  return std::make_shared<const GridWorld>(generate_map(spec.map_seed, spec.map_params));
}

PreparedEpisode prepare_episode(const ScenarioSpec& spec, int episode,
                                std::shared_ptr<const GridWorld> fixed_world) {
  return prepare(spec, episode_seed(spec.base_seed, episode), std::move(fixed_world), nullptr);
}

PreparedEpisode prepare_seeded(const ScenarioSpec& spec, std::uint64_t seed,
                               std::shared_ptr<const GridWorld> fixed_world) {
  return prepare(spec, seed, std::move(fixed_world), nullptr);
}

EpisodeRecord run_scenario_episode(const ScenarioSpec& spec, int episode,
                                   std::shared_ptr<const GridWorld> fixed_world) {
  return run_prepared(prepare_episode(spec, episode, std::move(fixed_world)));
}

unsigned worker_count() {
  if (const char* env = std::getenv("COOPMON_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1) {
      throw ConfigError("COOPMON_THREADS must be a positive integer, got '" + std::string(env) + "'");
    }
    return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body) {
  if (workers == 0) workers = worker_count();
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      if (failed.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < workers; ++w) threads.emplace_back(work);
    for (std::thread& th : threads) th.join();
  }
  if (error) std::rethrow_exception(error);
}

Aggregate aggregate(std::span<const double> metric, std::span<const double> reward) {
  Aggregate a;
  a.count = static_cast<int>(metric.size());
  auto mean_std = [](std::span<const double> v) {
    if (v.empty()) return std::pair{0.0, 0.0};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return std::pair{mean, sd};
  };
  std::tie(a.mean, a.stddev) = mean_std(metric);
  std::tie(a.reward_mean, a.reward_stddev) = mean_std(reward);
  if (a.count > 1) {
    boost::math::students_t dist(a.count - 1);
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    a.ci95 = t * a.stddev / std::sqrt(static_cast<double>(a.count));
  }
  return a;
}

SweepResult run_sweep(const std::vector<ScenarioSpec>& grid, unsigned workers,
                      const RecordSink& sink) {
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  SweepResult out;
  out.configs = grid;
  std::vector<std::size_t> offset;
  std::size_t total = 0;
  for (const ScenarioSpec& s : grid) {
    if (s.episodes < 1) throw ConfigError("episodes must be >= 1");
    out.hashes.push_back(config_hash(s));
    offset.push_back(total);
    total += static_cast<std::size_t>(s.episodes);
  }
  // One world per distinct map source; configs on the same map share it.
  std::map<std::string, std::shared_ptr<const GridWorld>> worlds;
  std::vector<std::shared_ptr<const GridWorld>> world_of(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    if (grid[c].regenerate_map) continue;
    const MapParams& mp = grid[c].map_params;
    const nlohmann::json key = {grid[c].map_file ? grid[c].map_file->string() : "", grid[c].map_seed,
                                mp.width_m, mp.height_m, mp.n_rooms, mp.room_size_min_m,
                                mp.room_size_max_m, mp.corridor_width_m, mp.cell_size_m,
                                mp.max_placements};
    auto& w = worlds[key.dump()];
    if (!w) w = scenario_world(grid[c]);
    world_of[c] = w;
  }

  out.rows.resize(total);
  CrowdCache cache;
  std::mutex sink_mutex;
  parallel_for(total, workers, [&](std::size_t k) {
    const std::size_t c =
        static_cast<std::size_t>(std::upper_bound(offset.begin(), offset.end(), k) - offset.begin()) - 1;
    const int e = static_cast<int>(k - offset[c]);
    const ScenarioSpec& spec = grid[c];
    EpisodeRecord rec;
    try {
      rec = run_prepared(prepare(spec, episode_seed(spec.base_seed, e), world_of[c], &cache));
    } catch (const Error& err) {
      throw Error("config " + std::to_string(c) + " (" + out.hashes[c] + ") episode " +
                  std::to_string(e) + ": " + err.what());
    }
    EpisodeRow& row = out.rows[k];
    row.config = c;
    row.episode = e;
    row.seed = rec.seed;
    row.task = spec.env.task;
    row.metric = rec.error(spec.env.task);
    row.reward = rec.reward_sum(spec.env.task);
    row.metrics = rec.metrics;
    if (sink) {
      std::lock_guard<std::mutex> lock(sink_mutex);
      sink(c, e, rec);
    }
  });

  for (std::size_t c = 0; c < grid.size(); ++c) {
    std::vector<double> metric, reward;
    for (int e = 0; e < grid[c].episodes; ++e) {
      metric.push_back(out.rows[offset[c] + e].metric);
      reward.push_back(out.rows[offset[c] + e].reward);
    }
    Aggregate a = aggregate(metric, reward);
    a.config = c;
    out.aggregates.push_back(a);
  }
  return out;
}

std::map<int, double> marginal_utility(const std::map<int, double>& errors_by_n) {
  if (errors_by_n.empty()) throw MissingTeamSize("no team sizes given");
  std::map<int, double> delta;
  int prev_n = errors_by_n.begin()->first;
  double prev_e = errors_by_n.begin()->second;
  for (auto it = std::next(errors_by_n.begin()); it != errors_by_n.end(); ++it) {
    if (it->first != prev_n + 1) {
      throw MissingTeamSize("team size " + std::to_string(prev_n + 1) + " missing");
    }
    delta[it->first] = prev_e - it->second;
    prev_n = it->first;
    prev_e = it->second;
  }
  return delta;
}

std::pair<double, double> Correlation::band(double x) const {
  const double se = residual_se *
      std::sqrt(1.0 / static_cast<double>(n) + (x - x_mean) * (x - x_mean) / sxx);
  const double y = predict(x);
  return {y - t_crit * se, y + t_crit * se};
}

Correlation correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeMismatch("correlation needs equally many x and y values");
  if (x.size() < 3) throw DegenerateVariance("correlation needs at least 3 pairs");
  Correlation c;
  c.n = x.size();
  const double n = static_cast<double>(c.n);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < c.n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < c.n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DegenerateVariance("x values have zero variance");
  if (!(syy > 0.0)) throw DegenerateVariance("y values have zero variance");
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  c.slope = sxy / sxx;
  c.intercept = my - c.slope * mx;
  c.x_mean = mx;
  c.sxx = sxx;
  double sse = 0.0;
  for (std::size_t i = 0; i < c.n; ++i) {
    const double res = y[i] - c.predict(x[i]);
    sse += res * res;
  }
  c.residual_se = std::sqrt(sse / (n - 2.0));
  boost::math::students_t dist(n - 2.0);
  c.t_crit = boost::math::quantile(boost::math::complement(dist, 0.025));
  return c;
}

std::vector<long> Heatmap::combined() const {
  std::vector<long> out(mobile.size());
  for (std::size_t k = 0; k < mobile.size(); ++k) out[k] = mobile[k] + fixed[k];
  return out;
}

Heatmap visibility_heatmap(std::span<const EpisodeRecord> records, const GridWorld& world,
                           const SensorSpec& mobile_spec, const SensorSpec& camera_spec) {
  Heatmap h;
  h.width = world.width_cells();
  h.height = world.height_cells();
  h.mobile.assign(static_cast<std::size_t>(h.width) * h.height, 0);
  h.fixed.assign(h.mobile.size(), 0);
  for (const EpisodeRecord& rec : records) {
    const long steps = static_cast<long>(rec.robots.size()) - 1;
    if (steps <= 0) continue;
    for (const SensorPose& cam : rec.cameras) {
      for (CellIndex c : sensor_footprint(cam, world, camera_spec)) h.fixed[world.flat(c)] += steps;
    }
    for (std::size_t t = 1; t < rec.robots.size(); ++t) {
      for (const Pose& r : rec.robots[t]) {
        for (CellIndex c : sensor_footprint({r.p, r.theta}, world, mobile_spec)) {
          ++h.mobile[world.flat(c)];
        }
      }
    }
  }
  return h;
}

std::vector<ScenarioSpec> hybrid_grid(const ScenarioSpec& base, int budget,
                                      const std::vector<HybridSplit>& splits, PlannerKind mobile) {
  std::vector<ScenarioSpec> grid;
  for (const HybridSplit& s : splits) {
    if (s.n_fixed < 0 || s.n_mobile < 0 || s.n_fixed + s.n_mobile != budget) {
      throw ConfigError("hybrid split F" + std::to_string(s.n_fixed) + "+M" +
                        std::to_string(s.n_mobile) + " does not sum to the budget " +
                        std::to_string(budget));
    }
    ScenarioSpec spec = base;
    spec.camera_poses.reset();
    if (s.n_mobile == 0) {
      spec.planner.kind = PlannerKind::FC;
      spec.n_robots = s.n_fixed;
      spec.n_fixed_cams = 0;
    } else {
      spec.planner.kind = mobile;
      spec.n_robots = s.n_mobile;
      spec.n_fixed_cams = s.n_fixed;
    }
    spec.label = "F" + std::to_string(s.n_fixed) + "+M" + std::to_string(s.n_mobile);
    grid.push_back(std::move(spec));
  }
  return grid;
}

SweepResult hybrid_sweep(const ScenarioSpec& base, int budget,
                         const std::vector<HybridSplit>& splits, PlannerKind mobile,
                         unsigned workers) {
  return run_sweep(hybrid_grid(base, budget, splits, mobile), workers);
}

std::vector<SensorPose> placement_candidates(const GridWorld& world, int count,
                                             const SensorSpec& spec) {
  const std::vector<SensorPose> all = default_camera_candidates(world);
  if (all.empty()) throw NoCandidates("map has no rooms");
  const std::size_t per_room = all.size() / world.rooms().size();
  struct Pick {
    SensorPose pose;
    std::size_t cells;
    std::size_t room;
  };
  std::vector<Pick> best;
  for (std::size_t r = 0; r < world.rooms().size(); ++r) {
    Pick pick{all[r * per_room], 0, r};
    for (std::size_t h = 0; h < per_room; ++h) {
      const SensorPose& pose = all[r * per_room + h];
      const std::size_t cells = sensor_footprint(pose, world, spec).size();
      if (cells > pick.cells) pick = {pose, cells, r};
    }
    best.push_back(pick);
  }
  std::stable_sort(best.begin(), best.end(),
                   [](const Pick& a, const Pick& b) { return a.cells > b.cells; });
  if (count < 1 || static_cast<std::size_t>(count) > best.size()) {
    throw NoCandidates("asked for " + std::to_string(count) + " placements, map has " +
                       std::to_string(best.size()) + " rooms");
  }
  std::vector<SensorPose> out;
  for (int k = 0; k < count; ++k) out.push_back(best[k].pose);
  return out;
}

std::vector<ScenarioSpec> placement_grid(const ScenarioSpec& base,
                                         const std::vector<SensorPose>& candidates) {
  std::vector<ScenarioSpec> grid;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    ScenarioSpec spec = base;
    spec.n_fixed_cams = 1;
    spec.camera_poses = std::vector<SensorPose>{candidates[k]};
    spec.label = "placement " + std::to_string(k + 1);
    grid.push_back(std::move(spec));
  }
  return grid;
}

std::string rows_to_csv(const SweepResult& r) {
  std::ostringstream os;
  os << "config_hash,config,label,episode,seed,task,metric,reward,tracking_error,occupancy_error,"
        "flow_error\n";
  for (const EpisodeRow& row : r.rows) {
    os << r.hashes[row.config] << ',' << row.config << ',' << r.configs[row.config].label << ','
       << row.episode << ',' << row.seed << ',' << task_name(row.task) << ',' << fmt(row.metric)
       << ',' << fmt(row.reward) << ',' << fmt(row.metrics.tracking_error) << ','
       << fmt(row.metrics.occupancy_error) << ',' << fmt(row.metrics.flow_error) << '\n';
  }
  return os.str();
}

std::string aggregates_to_csv(const SweepResult& r) {
  std::ostringstream os;
  os << "config_hash,config,label,planner,n_robots,n_fixed_cams,variant,task,episodes,mean,stddev,"
        "ci95,reward_mean,reward_stddev\n";
  for (const Aggregate& a : r.aggregates) {
    const ScenarioSpec& s = r.configs[a.config];
    os << r.hashes[a.config] << ',' << a.config << ',' << s.label << ','
       << planner_name(s.planner.kind) << ',' << s.n_robots << ',' << s.n_fixed_cams << ','
       << variant_name(s.variant) << ',' << task_name(s.env.task) << ',' << a.count << ','
       << fmt(a.mean) << ',' << fmt(a.stddev) << ',' << fmt(a.ci95) << ',' << fmt(a.reward_mean)
       << ',' << fmt(a.reward_stddev) << '\n';
  }
  return os.str();
}

std::string heatmap_to_string(const Heatmap& h) {
  nlohmann::json j;
  j["format"] = "coopmon-heatmap";
  j["width_cells"] = h.width;
  j["height_cells"] = h.height;
  j["row_order"] = "bottom_to_top";
  auto rows = [&](const std::vector<long>& v) {
    nlohmann::json out = nlohmann::json::array();
    for (int r = 0; r < h.height; ++r) {
      out.push_back(std::vector<long>(v.begin() + static_cast<long>(r) * h.width,
                                      v.begin() + static_cast<long>(r + 1) * h.width));
    }
    return out;
  };
  j["mobile"] = rows(h.mobile);
  j["fixed"] = rows(h.fixed);
  j["combined"] = rows(h.combined());
  return j.dump() + "\n";
}

}  // namespace coopmon
