#include "coopmon/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "coopmon/errors.hpp"

namespace coopmon {

namespace {

using nlohmann::json;

constexpr double kDeg = kPi / 180.0;

json marl_defaults() {
  return {
      {"hidden_dim", 64},
      {"attention_heads", 4},
      {"lr_actor", 3e-4},
      {"lr_critic", 3e-4},
      {"clip", 0.2},
      {"max_grad_norm", 0.5},
      {"value_coef", 0.5},
      {"gamma", 0.99},
      {"gae_lambda", 0.95},
      {"entropy_speed", 0.01},
      {"entropy_rotation", 0.001},
      {"parallel_envs", 250},
      {"rollout_steps", 1000},
      {"minibatches", 20},
      {"epochs", 20},
      {"chunk_length", 50},
      {"total_timesteps", 50000000},
  };
}

json sensor_json(const SensorSpec& s) {
  return {{"range_m", s.range_m}, {"fov_deg", s.fov_rad / kDeg}, {"k_samples", s.k_samples}};
}

json to_json(const RunConfig& c) {
  const ScenarioSpec& s = c.scenario;
  const MapParams& mp = s.map_params;
  const CrowdParams& cp = s.crowd;
  const EnvParams& e = s.env;
  const PlannerOptions& po = s.planner;
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["map"] = {{"seed", s.map_seed},
              {"file", s.map_file ? json(s.map_file->string()) : json(nullptr)},
              {"width_m", mp.width_m},
              {"height_m", mp.height_m},
              {"rooms", mp.n_rooms},
              {"room_size_min_m", mp.room_size_min_m},
              {"room_size_max_m", mp.room_size_max_m},
              {"corridor_width_m", mp.corridor_width_m},
              {"cell_size_m", mp.cell_size_m},
              {"max_placements", mp.max_placements},
              {"regenerate_per_episode", s.regenerate_map}};
  j["crowd"] = {{"humans", cp.m},
                {"dwell_mu", cp.dwell.mu},
                {"dwell_sigma", cp.dwell.sigma},
                {"v_max", cp.v_max},
                {"omega_max", cp.omega_max},
                {"lookahead_m", cp.lookahead_m},
                {"buffer_m", cp.buffer_m},
                {"variant", variant_name(s.variant)},
                {"skew_multiplier", s.skew_multiplier},
                {"transition_matrix", cp.transition_matrix ? json(*cp.transition_matrix) : json(nullptr)},
                {"fixed_seed", s.crowd_seed ? json(*s.crowd_seed) : json(nullptr)}};
  j["env"] = {{"dt", e.dt},
              {"horizon", e.horizon},
              {"robots", s.n_robots},
              {"v_max", e.v_max},
              {"a_max", e.a_max},
              {"spawn_separation_m", e.spawn_separation_m},
              {"speeds", e.actions.v},
              {"turn_rates", e.actions.delta},
              {"belief_init", e.belief_init == BeliefInit::Informed ? "informed" : "uninformed"},
              {"clip_component", e.clip.per_component},
              {"clip_total", e.clip.total},
              {"deployment_mode", e.deployment_mode},
              {"post_update_heading", e.post_update_heading}};
  json lidar = sensor_json(e.lidar);
  lidar["beams"] = e.lidar.beams;
  j["sensors"] = {{"tracking", sensor_json(e.tracking)},
                  {"lidar", lidar},
                  {"camera", sensor_json(e.camera)},
                  {"noise",
                   {{"sigma_p", e.noise.sigma_p},
                    {"sigma_theta", e.noise.sigma_theta},
                    {"sigma_v", e.noise.sigma_v}}}};
  j["planner"] = {{"kind", planner_name(po.kind)},
                  {"lookahead_m", po.lookahead_m},
                  {"buffer_m", po.buffer_m},
                  {"arrive_m", po.arrive_m},
                  {"mcpp_pitch_m", po.mcpp.pitch_m},
                  {"mcpp_buffer_m", po.mcpp.buffer_m},
                  {"mcpp_range_m", po.mcpp.range_m},
                  {"pm_kinematic_caps", po.pm_kinematic_caps}};
  json planners = json::array();
  for (PlannerKind k : c.sweep_planners) planners.push_back(planner_name(k));
  json tasks = json::array();
  for (Task t : c.sweep_tasks) tasks.push_back(task_name(t));
  json variants = json::array();
  for (OodVariant v : c.sweep_variants) variants.push_back(variant_name(v));
  json splits = json::array();
  for (const HybridSplit& h : c.hybrid_splits) splits.push_back({h.n_fixed, h.n_mobile});
  j["experiment"] = {{"task", task_name(e.task)},
                     {"seed", s.base_seed},
                     {"episodes", s.episodes},
                     {"fixed_cameras", s.n_fixed_cams},
                     {"sweep_robots", c.sweep_robots},
                     {"sweep_planners", planners},
                     {"sweep_tasks", tasks},
                     {"sweep_variants", variants},
                     {"hybrid_budget", c.hybrid_budget},
                     {"hybrid_splits", splits},
                     {"hybrid_planner", planner_name(c.hybrid_planner)},
                     {"placements", c.placements},
                     {"output_dir", c.output_dir}};
  j["marl"] = c.marl_json.empty() ? marl_defaults() : json::parse(c.marl_json);
  return j;
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Overlays `src` onto `dst`, rejecting keys the defaults do not have.
void merge_strict(json& dst, const json& src, const std::string& path) {
  if (!src.is_object()) throw ConfigError((path.empty() ? "<root>" : path) + ": expected an object");
  for (auto it = src.begin(); it != src.end(); ++it) {
    const std::string key_path = join(path, it.key());
    if (!dst.contains(it.key())) throw ConfigError(key_path + ": unknown key");
    json& slot = dst[it.key()];
    if (slot.is_object()) {
      merge_strict(slot, it.value(), key_path);
    } else {
      slot = it.value();
    }
  }
}

// Typed access with key-path diagnostics.
class Reader {
 public:
  explicit Reader(const json& root) : root_(root) {}

  const json& at(const std::string& path) const {
    const json* node = &root_;
    std::size_t start = 0;
    while (start <= path.size()) {
      const std::size_t dot = path.find('.', start);
      const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      node = &node->at(key);
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    return *node;
  }

  double number(const std::string& path) const {
    const json& v = at(path);
    if (!v.is_number()) throw ConfigError(path + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path + ": must be finite");
    return x;
  }
  double positive(const std::string& path) const {
    const double x = number(path);
    if (!(x > 0.0)) throw ConfigError(path + ": must be positive");
    return x;
  }
  double nonnegative(const std::string& path) const {
    const double x = number(path);
    if (x < 0.0) throw ConfigError(path + ": must be nonnegative");
    return x;
  }
  long integer(const std::string& path, long lo = std::numeric_limits<long>::min()) const {
    const json& v = at(path);
    if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
    const long x = v.get<long>();
    if (x < lo) throw ConfigError(path + ": must be >= " + std::to_string(lo));
    return x;
  }
  std::uint64_t seed(const std::string& path) const {
    const json& v = at(path);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw ConfigError(path + ": expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }
  bool boolean(const std::string& path) const {
    const json& v = at(path);
    if (!v.is_boolean()) throw ConfigError(path + ": expected true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& path) const {
    const json& v = at(path);
    if (!v.is_string()) throw ConfigError(path + ": expected a string");
    return v.get<std::string>();
  }
  const json& array(const std::string& path) const {
    const json& v = at(path);
    if (!v.is_array()) throw ConfigError(path + ": expected an array");
    return v;
  }
  template <class F>
  auto parsed(const std::string& path, F&& parse) const {
    const std::string s = string(path);
    try {
      return parse(s);
    } catch (const Error& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }

 private:
  const json& root_;
};

std::array<double, 3> triple(const Reader& r, const std::string& path) {
  const json& a = r.array(path);
  if (a.size() != 3) throw ConfigError(path + ": expected exactly 3 values");
  std::array<double, 3> out{};
  for (std::size_t k = 0; k < 3; ++k) {
    if (!a[k].is_number()) throw ConfigError(path + "[" + std::to_string(k) + "]: expected a number");
    out[k] = a[k].get<double>();
  }
  return out;
}

SensorSpec read_sensor(const Reader& r, const std::string& path, SensorSpec base) {
  base.range_m = r.positive(path + ".range_m");
  base.fov_rad = r.positive(path + ".fov_deg") * kDeg;
  base.k_samples = static_cast<int>(r.integer(path + ".k_samples", 2));
  try {
    check_sensor(base);
  } catch (const Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return base;
}

RunConfig from_json(const json& j) {
  const Reader r(j);
  if (r.integer("schema_version") != kConfigSchemaVersion) {
    throw ConfigError("schema_version: unsupported version " + j.at("schema_version").dump() +
                      ", expected " + std::to_string(kConfigSchemaVersion));
  }
  RunConfig c;
  ScenarioSpec& s = c.scenario;
  MapParams& mp = s.map_params;
  s.map_seed = r.seed("map.seed");
  if (!r.at("map.file").is_null()) s.map_file = r.string("map.file");
  mp.width_m = r.positive("map.width_m");
  mp.height_m = r.positive("map.height_m");
  mp.n_rooms = static_cast<int>(r.integer("map.rooms", 1));
  mp.room_size_min_m = r.positive("map.room_size_min_m");
  mp.room_size_max_m = r.positive("map.room_size_max_m");
  if (mp.room_size_max_m < mp.room_size_min_m) {
    throw ConfigError("map.room_size_max_m: must be >= map.room_size_min_m");
  }
  mp.corridor_width_m = r.positive("map.corridor_width_m");
  mp.cell_size_m = r.positive("map.cell_size_m");
  mp.max_placements = static_cast<int>(r.integer("map.max_placements", 1));
  s.regenerate_map = r.boolean("map.regenerate_per_episode");

  CrowdParams& cp = s.crowd;
  cp.m = static_cast<int>(r.integer("crowd.humans", 0));
  cp.dwell.mu = r.number("crowd.dwell_mu");
  cp.dwell.sigma = r.nonnegative("crowd.dwell_sigma");
  cp.v_max = r.positive("crowd.v_max");
  cp.omega_max = r.positive("crowd.omega_max");
  cp.lookahead_m = r.positive("crowd.lookahead_m");
  cp.buffer_m = r.nonnegative("crowd.buffer_m");
  s.variant = r.parsed("crowd.variant", parse_variant);
  s.skew_multiplier = r.positive("crowd.skew_multiplier");
  if (!r.at("crowd.transition_matrix").is_null()) {
    try {
      cp.transition_matrix = r.at("crowd.transition_matrix").get<TransitionMatrix>();
      check_transition_matrix(*cp.transition_matrix);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("crowd.transition_matrix: ") + e.what());
    } catch (const Error& e) {
      throw ConfigError(std::string("crowd.transition_matrix: ") + e.what());
    }
  }
  if (!r.at("crowd.fixed_seed").is_null()) s.crowd_seed = r.seed("crowd.fixed_seed");

  EnvParams& e = s.env;
  e.dt = r.positive("env.dt");
  e.horizon = static_cast<int>(r.integer("env.horizon", 0));
  s.n_robots = static_cast<int>(r.integer("env.robots", 0));
  e.n_robots = s.n_robots;
  e.v_max = r.positive("env.v_max");
  e.a_max = r.positive("env.a_max");
  e.spawn_separation_m = r.nonnegative("env.spawn_separation_m");
  e.actions.v = triple(r, "env.speeds");
  e.actions.delta = triple(r, "env.turn_rates");
  const std::string init = r.string("env.belief_init");
  if (init == "informed") {
    e.belief_init = BeliefInit::Informed;
  } else if (init == "uninformed") {
    e.belief_init = BeliefInit::Uninformed;
  } else {
    throw ConfigError("env.belief_init: expected 'informed' or 'uninformed'");
  }
  e.clip.per_component = r.positive("env.clip_component");
  e.clip.total = r.positive("env.clip_total");
  e.deployment_mode = r.boolean("env.deployment_mode");
  e.post_update_heading = r.boolean("env.post_update_heading");
  for (double v : e.actions.v) {
    if (v < 0.0 || v > e.v_max) throw ConfigError("env.speeds: values must lie in [0, env.v_max]");
  }

  e.tracking = read_sensor(r, "sensors.tracking", tracking_sensor());
  e.lidar = read_sensor(r, "sensors.lidar", lidar_sensor());
  e.lidar.beams = static_cast<int>(r.integer("sensors.lidar.beams", 1));
  e.camera = read_sensor(r, "sensors.camera", camera_sensor());
  e.noise.sigma_p = r.nonnegative("sensors.noise.sigma_p");
  e.noise.sigma_theta = r.nonnegative("sensors.noise.sigma_theta");
  e.noise.sigma_v = r.nonnegative("sensors.noise.sigma_v");

  PlannerOptions& po = s.planner;
  po.kind = r.parsed("planner.kind", parse_planner);
  po.lookahead_m = r.positive("planner.lookahead_m");
  po.buffer_m = r.nonnegative("planner.buffer_m");
  po.arrive_m = r.positive("planner.arrive_m");
  po.mcpp.pitch_m = r.positive("planner.mcpp_pitch_m");
  po.mcpp.buffer_m = r.nonnegative("planner.mcpp_buffer_m");
  po.mcpp.range_m = r.positive("planner.mcpp_range_m");
  po.pm_kinematic_caps = r.boolean("planner.pm_kinematic_caps");

  e.task = r.parsed("experiment.task", parse_task);
  s.base_seed = r.seed("experiment.seed");
  s.episodes = static_cast<int>(r.integer("experiment.episodes", 1));
  s.n_fixed_cams = static_cast<int>(r.integer("experiment.fixed_cameras", 0));
  const json& robots = r.array("experiment.sweep_robots");
  for (std::size_t k = 0; k < robots.size(); ++k) {
    if (!robots[k].is_number_integer() || robots[k].get<long>() < 0) {
      throw ConfigError("experiment.sweep_robots[" + std::to_string(k) + "]: expected a nonnegative integer");
    }
    c.sweep_robots.push_back(robots[k].get<int>());
  }
  auto names = [&](const std::string& path, auto parse, auto& out) {
    const json& a = r.array(path);
    for (std::size_t k = 0; k < a.size(); ++k) {
      const std::string item = path + "[" + std::to_string(k) + "]";
      if (!a[k].is_string()) throw ConfigError(item + ": expected a string");
      try {
        out.push_back(parse(a[k].get<std::string>()));
      } catch (const Error& err) {
        throw ConfigError(item + ": " + err.what());
      }
    }
  };
  names("experiment.sweep_planners", parse_planner, c.sweep_planners);
  names("experiment.sweep_tasks", parse_task, c.sweep_tasks);
  names("experiment.sweep_variants", parse_variant, c.sweep_variants);
  c.hybrid_budget = static_cast<int>(r.integer("experiment.hybrid_budget", 1));
  c.hybrid_splits.clear();
  const json& splits = r.array("experiment.hybrid_splits");
  for (std::size_t k = 0; k < splits.size(); ++k) {
    const std::string item = "experiment.hybrid_splits[" + std::to_string(k) + "]";
    const json& sp = splits[k];
    if (!sp.is_array() || sp.size() != 2 || !sp[0].is_number_integer() || !sp[1].is_number_integer()) {
      throw ConfigError(item + ": expected [n_fixed, n_mobile]");
    }
    const HybridSplit h{sp[0].get<int>(), sp[1].get<int>()};
    if (h.n_fixed < 0 || h.n_mobile < 0 || h.n_fixed + h.n_mobile != c.hybrid_budget) {
      throw ConfigError(item + ": must be nonnegative and sum to experiment.hybrid_budget");
    }
    c.hybrid_splits.push_back(h);
  }
  c.hybrid_planner = r.parsed("experiment.hybrid_planner", parse_planner);
  c.placements = static_cast<int>(r.integer("experiment.placements", 1));
  c.output_dir = r.string("experiment.output_dir");

  const json& marl = r.at("marl");
  for (auto it = marl.begin(); it != marl.end(); ++it) {
    if (!it.value().is_number()) throw ConfigError("marl." + it.key() + ": expected a number");
  }
  c.marl_json = marl.dump();
  return c;
}

json parse_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  c.marl_json = marl_defaults().dump();
  return c;
}

std::string config_to_string(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

RunConfig config_from_string(const std::string& text) {
  json merged = to_json(default_config());
  const json src = parse_text(text, "config");
  if (!src.is_object()) throw ConfigError("<root>: expected an object");
  if (!src.contains("schema_version")) throw ConfigError("schema_version: missing");
  merge_strict(merged, src, "");
  return from_json(merged);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_string(ss.str());
}

namespace {

void set_key(json& root, const std::string& key_path, const std::string& value) {
  json* node = &root;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = key_path.find('.', start);
    const std::string key =
        key_path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) throw ConfigError(key_path + ": unknown key");
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  json parsed = json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = value;
  if (node->is_object()) {
    merge_strict(*node, parsed, key_path);
  } else {
    *node = parsed;
  }
}

}  // namespace

void apply_override(RunConfig& config, const std::string& key_path, const std::string& value) {
  apply_overrides(config, {{key_path, value}});
}

void apply_overrides(RunConfig& config,
                     const std::vector<std::pair<std::string, std::string>>& overrides) {
  json root = to_json(config);
  for (const auto& [key, value] : overrides) set_key(root, key, value);
  config = from_json(root);
}

std::vector<ScenarioSpec> sweep_grid(const RunConfig& config) {
  const ScenarioSpec& base = config.scenario;
  const std::vector<PlannerKind> planners =
      config.sweep_planners.empty() ? std::vector<PlannerKind>{base.planner.kind} : config.sweep_planners;
  const std::vector<int> robots =
      config.sweep_robots.empty() ? std::vector<int>{base.n_robots} : config.sweep_robots;
  const std::vector<Task> tasks =
      config.sweep_tasks.empty() ? std::vector<Task>{base.env.task} : config.sweep_tasks;
  const std::vector<OodVariant> variants =
      config.sweep_variants.empty() ? std::vector<OodVariant>{base.variant} : config.sweep_variants;
  std::vector<ScenarioSpec> grid;
  for (PlannerKind p : planners) {
    for (int n : robots) {
      for (Task t : tasks) {
        for (OodVariant v : variants) {
          ScenarioSpec s = base;
          s.planner.kind = p;
          s.n_robots = n;
          s.env.n_robots = n;
          s.env.task = t;
          s.variant = v;
          s.label = std::string(planner_name(p)) + " n=" + std::to_string(n) + " " + task_name(t) +
                    " " + variant_name(v);
          grid.push_back(std::move(s));
        }
      }
    }
  }
  return grid;
}

}  // namespace coopmon
