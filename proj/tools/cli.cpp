#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "coopmon/bridge.hpp"
#include "coopmon/config.hpp"
#include "coopmon/errors.hpp"
#include "coopmon/eval.hpp"

namespace coopmon::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Failure tagged with the pipeline stage it came from.
struct StageError : Error {
  StageError(std::string stage, const Error& cause)
      : Error(cause.what()), stage(std::move(stage)), code(classify(cause)) {}
  static int classify(const Error& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return kConfig;
    if (dynamic_cast<const GenerationFailed*>(&e) || dynamic_cast<const NoPath*>(&e) ||
        dynamic_cast<const SpawnFailed*>(&e) || dynamic_cast<const CoverageGap*>(&e) ||
        dynamic_cast<const NoCandidates*>(&e)) {
      return kGeneration;
    }
    if (dynamic_cast<const ProtocolError*>(&e)) return kBridge;
    return kFailure;
  }
  std::string stage;
  int code;
};

template <class F>
auto stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  }
}

struct Common {
  std::string config_file;
  std::vector<std::string> sets;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::optional<std::string> planner;
  std::optional<std::string> task;
  std::optional<std::string> variant;
};

void add_common(CLI::App* app, Common& c, bool with_out = true) {
  app->add_option("-c,--config", c.config_file, "Config file (JSON)")->check(CLI::ExistingFile);
  app->add_option("--set", c.sets, "Override a config key, e.g. env.horizon=200")->take_all();
  if (with_out) app->add_option("-o,--out", c.out, "Output directory");
  app->add_option("--seed", c.seed, "Base seed");
  app->add_option("--episodes", c.episodes, "Episodes per configuration");
  app->add_option("--planner", c.planner, "fc, ws, mcpp or pm");
  app->add_option("--task", c.task, "tracking, occupancy or flow");
  app->add_option("--variant", c.variant, "default, sparse, crowded, long_dwell or skewed");
}

std::string quoted(const std::string& s) { return json(s).dump(); }

RunConfig resolve(const Common& c) {
  return stage("config", [&] {
    RunConfig cfg = c.config_file.empty() ? default_config() : load_config(c.config_file);
    std::vector<std::pair<std::string, std::string>> sets;
    for (const std::string& kv : c.sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
      sets.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }
    apply_overrides(cfg, sets);
    if (c.seed) apply_override(cfg, "experiment.seed", std::to_string(*c.seed));
    if (c.episodes) apply_override(cfg, "experiment.episodes", std::to_string(*c.episodes));
    if (c.planner) apply_override(cfg, "planner.kind", quoted(*c.planner));
    if (c.task) apply_override(cfg, "experiment.task", quoted(*c.task));
    if (c.variant) apply_override(cfg, "crowd.variant", quoted(*c.variant));
    if (!c.out.empty()) apply_override(cfg, "experiment.output_dir", quoted(c.out));
    return cfg;
  });
}

void write_file(const fs::path& path, const std::string& text) {
  stage("output", [&] {
    if (path.has_parent_path()) {
      std::error_code ec;
      fs::create_directories(path.parent_path(), ec);
      if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
    if (!f) throw IoError("write failed for " + path.string());
    return 0;
  });
}

void write_manifest(const fs::path& path, const std::string& command, const RunConfig& cfg,
                    const std::vector<std::string>& outputs) {
  json m;
  m["format"] = "coopmon-manifest";
  m["command"] = command;
  m["config"] = json::parse(config_to_string(cfg));
  m["outputs"] = outputs;
  write_file(path, m.dump(2) + "\n");
}

std::string run_tag(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d", k);
  return buf;
}

int cmd_gen_map(const Common& c, const std::string& out_file, std::ostream& out) {
  RunConfig cfg = resolve(c);
  if (c.seed) apply_override(cfg, "map.seed", std::to_string(*c.seed));
  const GridWorld world =
      stage("generation", [&] { return generate_map(cfg.scenario.map_seed, cfg.scenario.map_params); });
  const fs::path path = out_file.empty() ? fs::path(cfg.output_dir) / "map.json" : fs::path(out_file);
  write_file(path, map_to_string(world));
  write_manifest(path.string() + ".manifest.json", "gen-map", cfg, {path.filename().string()});
  out << "map: " << world.rooms().size() << " rooms, " << world.zone_count() << " zones -> "
      << path.string() << "\n";
  return kOk;
}

int cmd_simulate(const Common& c, std::optional<int> robots, bool records, std::ostream& out) {
  RunConfig cfg = resolve(c);
  if (robots) apply_override(cfg, "env.robots", std::to_string(*robots));
  const fs::path dir = cfg.output_dir;
  ScenarioSpec spec = cfg.scenario;
  spec.label = "simulate";
  std::vector<std::string> outputs{"episodes.csv", "summary.csv"};
  std::map<int, std::string> texts;
  const SweepResult result = stage("simulation", [&] {
    return run_sweep({spec}, 0, [&](std::size_t, int e, const EpisodeRecord& rec) {
      if (records) texts[e] = record_to_string(rec);
    });
  });
  for (const auto& [e, text] : texts) {
    const std::string name = "episode_" + run_tag(e) + ".json";
    write_file(dir / name, text);
    outputs.push_back(name);
  }
  write_file(dir / "episodes.csv", rows_to_csv(result));
  write_file(dir / "summary.csv", aggregates_to_csv(result));
  write_manifest(dir / "manifest.json", "simulate", cfg, outputs);
  const Aggregate& a = result.aggregates.front();
  out << task_name(spec.env.task) << " error " << a.mean << " +- " << a.ci95 << " over " << a.count
      << " episodes -> " << dir.string() << "\n";
  return kOk;
}

int cmd_sweep(const Common& c, const std::vector<int>& robots, const std::vector<std::string>& planners,
              const std::vector<std::string>& tasks, const std::vector<std::string>& variants,
              bool hybrid, std::ostream& out) {
  RunConfig cfg = resolve(c);
  stage("config", [&] {
    if (!robots.empty()) apply_override(cfg, "experiment.sweep_robots", json(robots).dump());
    if (!planners.empty()) apply_override(cfg, "experiment.sweep_planners", json(planners).dump());
    if (!tasks.empty()) apply_override(cfg, "experiment.sweep_tasks", json(tasks).dump());
    if (!variants.empty()) apply_override(cfg, "experiment.sweep_variants", json(variants).dump());
    return 0;
  });
  const std::vector<ScenarioSpec> grid = stage("config", [&] {
    return hybrid ? hybrid_grid(cfg.scenario, cfg.hybrid_budget, cfg.hybrid_splits, cfg.hybrid_planner)
                  : sweep_grid(cfg);
  });
  const SweepResult result = stage("simulation", [&] { return run_sweep(grid); });
  const fs::path dir = cfg.output_dir;
  write_file(dir / "results.csv", rows_to_csv(result));
  write_file(dir / "aggregate.csv", aggregates_to_csv(result));

  // Marginal utility per (planner, task, variant) over the robot axis.
  json summary = json::array();
  std::map<std::string, std::map<int, double>> by_group;
  for (const Aggregate& a : result.aggregates) {
    const ScenarioSpec& s = result.configs[a.config];
    summary.push_back({{"config_hash", result.hashes[a.config]},
                       {"label", s.label},
                       {"planner", planner_name(s.planner.kind)},
                       {"n_robots", s.n_robots},
                       {"n_fixed_cams", s.n_fixed_cams},
                       {"task", task_name(s.env.task)},
                       {"variant", variant_name(s.variant)},
                       {"episodes", a.count},
                       {"mean", a.mean},
                       {"stddev", a.stddev},
                       {"ci95", a.ci95},
                       {"reward_mean", a.reward_mean}});
    if (!hybrid) {
      const std::string key = std::string(planner_name(s.planner.kind)) + " " + task_name(s.env.task) +
                              " " + variant_name(s.variant);
      by_group[key][s.n_robots] = a.mean;
    }
  }
  json utility = json::object();
  for (const auto& [key, errors] : by_group) {
    if (errors.size() < 2) continue;
    try {
      json by_n = json::object();
      for (const auto& [n, d] : marginal_utility(errors)) by_n[std::to_string(n)] = d;
      utility[key] = by_n;
    } catch (const MissingTeamSize& e) {
      utility[key] = e.what();
    }
  }
  write_file(dir / "summary.json", json{{"aggregates", summary}, {"marginal_utility", utility}}.dump(2) + "\n");
  write_manifest(dir / "manifest.json", hybrid ? "sweep --hybrid" : "sweep", cfg,
                 {"results.csv", "aggregate.csv", "summary.json"});

  out << "label,episodes,mean,stddev,ci95\n";
  for (const Aggregate& a : result.aggregates) {
    out << result.configs[a.config].label << ',' << a.count << ',' << a.mean << ',' << a.stddev << ','
        << a.ci95 << "\n";
  }
  return kOk;
}

int cmd_placement(const Common& c, int robots, std::ostream& out) {
  RunConfig cfg = resolve(c);
  apply_override(cfg, "env.robots", std::to_string(robots));
  const auto world = stage("generation", [&] { return scenario_world(cfg.scenario); });
  const std::vector<SensorPose> candidates = stage("placement", [&] {
    return placement_candidates(*world, cfg.placements, cfg.scenario.env.camera);
  });
  const SweepResult result =
      stage("simulation", [&] { return run_sweep(placement_grid(cfg.scenario, candidates)); });
  json cands = json::array();
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const Aggregate& a = result.aggregates[k];
    cands.push_back({{"id", k + 1},
                     {"x", candidates[k].p.x},
                     {"y", candidates[k].p.y},
                     {"theta", candidates[k].theta},
                     {"footprint_cells", sensor_footprint(candidates[k], *world, cfg.scenario.env.camera).size()},
                     {"mean", a.mean},
                     {"stddev", a.stddev},
                     {"ci95", a.ci95}});
  }
  const fs::path dir = cfg.output_dir;
  write_file(dir / "placements.json", json{{"robots", robots}, {"candidates", cands}}.dump(2) + "\n");
  write_file(dir / "results.csv", rows_to_csv(result));
  write_file(dir / "aggregate.csv", aggregates_to_csv(result));
  write_manifest(dir / "manifest.json", "placement", cfg,
                 {"placements.json", "results.csv", "aggregate.csv"});
  out << "id,x,y,theta,mean,stddev\n";
  for (const json& j : cands) {
    out << j["id"] << ',' << j["x"] << ',' << j["y"] << ',' << j["theta"] << ',' << j["mean"] << ','
        << j["stddev"] << "\n";
  }
  return kOk;
}

// Red = mobile, blue = fixed, walls black, free cells white; row 0 at the bottom.
std::string heatmap_ppm(const Heatmap& h, const GridWorld& world) {
  long max_m = 1, max_f = 1;
  for (long v : h.mobile) max_m = std::max(max_m, v);
  for (long v : h.fixed) max_f = std::max(max_f, v);
  std::ostringstream os;
  os << "P6\n" << h.width << ' ' << h.height << "\n255\n";
  for (int j = h.height - 1; j >= 0; --j) {
    for (int i = 0; i < h.width; ++i) {
      const std::size_t k = world.flat(i, j);
      unsigned char rgb[3] = {0, 0, 0};
      if (world.is_free(i, j)) {
        const double m = static_cast<double>(h.mobile[k]) / max_m;
        const double f = static_cast<double>(h.fixed[k]) / max_f;
        rgb[0] = static_cast<unsigned char>(255 * (1.0 - 0.8 * f));
        rgb[1] = static_cast<unsigned char>(255 * (1.0 - 0.8 * std::max(m, f)));
        rgb[2] = static_cast<unsigned char>(255 * (1.0 - 0.8 * m));
      }
      os.write(reinterpret_cast<const char*>(rgb), 3);
    }
  }
  return os.str();
}

int cmd_heatmap(const Common& c, std::optional<int> fixed, std::ostream& out) {
  RunConfig cfg = resolve(c);
  if (fixed) apply_override(cfg, "experiment.fixed_cameras", std::to_string(*fixed));
  const auto world = stage("generation", [&] { return scenario_world(cfg.scenario); });
  std::map<int, EpisodeRecord> records;
  stage("simulation", [&] {
    return run_sweep({cfg.scenario}, 0, [&](std::size_t, int e, const EpisodeRecord& rec) {
      records.emplace(e, rec);
    });
  });
  std::vector<EpisodeRecord> ordered;
  for (auto& [e, rec] : records) ordered.push_back(std::move(rec));
  const Heatmap h =
      visibility_heatmap(ordered, *world, cfg.scenario.env.tracking, cfg.scenario.env.camera);
  const fs::path dir = cfg.output_dir;
  write_file(dir / "heatmap.json", heatmap_to_string(h));
  write_file(dir / "heatmap.ppm", heatmap_ppm(h, *world));
  write_manifest(dir / "manifest.json", "heatmap", cfg, {"heatmap.json", "heatmap.ppm"});
  long sm = 0, sf = 0;
  for (long v : h.mobile) sm += v;
  for (long v : h.fixed) sf += v;
  out << "heatmap: mobile " << sm << " fixed " << sf << " sensor-cell counts -> " << dir.string() << "\n";
  return kOk;
}

std::vector<std::pair<double, double>> read_pairs(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open " + csv.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  const auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw FormatError(csv.string() + ": no '" + name + "' column");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t cr = col("reward"), cm = col("metric");
  std::vector<std::pair<double, double>> pairs;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < header.size()) throw FormatError(csv.string() + ": short row " + std::to_string(row));
    try {
      pairs.emplace_back(std::stod(cells[cr]), std::stod(cells[cm]));
    } catch (const std::exception&) {
      throw FormatError(csv.string() + ": bad number on row " + std::to_string(row));
    }
  }
  return pairs;
}

int cmd_correlate(const Common& c, const std::string& input, std::ostream& out) {
  RunConfig cfg = resolve(c);
  std::vector<std::pair<double, double>> pairs;
  std::vector<std::string> outputs{"correlation.json"};
  const fs::path dir = cfg.output_dir;
  if (!input.empty()) {
    pairs = stage("input", [&] { return read_pairs(input); });
  } else {
    // One fixed scenario: the crowd is held fixed, spawns and planner draws vary.
    ScenarioSpec spec = cfg.scenario;
    if (!spec.crowd_seed) spec.crowd_seed = derive_seed(spec.base_seed, static_cast<std::uint64_t>(Stream::Crowd));
    spec.label = "correlate";
    const SweepResult result = stage("simulation", [&] { return run_sweep({spec}); });
    for (const EpisodeRow& r : result.rows) pairs.emplace_back(r.reward, r.metric);
    write_file(dir / "results.csv", rows_to_csv(result));
    outputs.push_back("results.csv");
  }
  std::vector<double> x, y;
  for (const auto& [r, e] : pairs) {
    x.push_back(r);
    y.push_back(e);
  }
  const Correlation corr = stage("analysis", [&] { return correlation(x, y); });
  json band = json::array();
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  for (int k = 0; k <= 20; ++k) {
    const double xv = *lo + (*hi - *lo) * k / 20.0;
    const auto [b0, b1] = corr.band(xv);
    band.push_back({xv, corr.predict(xv), b0, b1});
  }
  json j = {{"n", corr.n},           {"r", corr.r},
            {"slope", corr.slope},   {"intercept", corr.intercept},
            {"t_crit", corr.t_crit}, {"residual_se", corr.residual_se},
            {"band", band},          {"points", pairs}};
  write_file(dir / "correlation.json", j.dump(2) + "\n");
  write_manifest(dir / "manifest.json", "correlate", cfg, outputs);
  out << "R = " << corr.r << " (n = " << corr.n << "), error = " << corr.intercept << " + "
      << corr.slope << " * reward\n";
  return kOk;
}

int cmd_serve(const Common& c, bool tcp, const std::string& host, int port, bool no_info,
              std::ostream& out, std::ostream& err) {
  RunConfig cfg = resolve(c);
  stage("bridge", [&] {
    if (tcp) {
      TcpOptions opt;
      opt.host = host;
      opt.port = port;
      opt.on_listen = [&](int p) { err << "bridge listening on " << host << ":" << p << std::endl; };
      try {
        serve_tcp(cfg, opt, 0, !no_info);
      } catch (const IoError& e) {
        throw ProtocolError(e.what());
      }
    } else {
      BridgeSession session(cfg, 0, !no_info);
      serve_stream(session, std::cin, out);
    }
    return 0;
  });
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"coopmon: multi-robot indoor monitoring simulator and planner benchmark"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Common common;
  std::string map_out;
  auto* gen = app.add_subcommand("gen-map", "Generate a map and save it");
  add_common(gen, common, false);
  gen->add_option("-o,--out", map_out, "Output map file");

  std::optional<int> sim_robots;
  bool no_records = false;
  auto* sim = app.add_subcommand("simulate", "Run episodes of one scenario");
  add_common(sim, common);
  sim->add_option("--robots", sim_robots, "Number of robots");
  sim->add_flag("--no-records", no_records, "Skip per-episode record files");

  std::vector<int> sw_robots;
  std::vector<std::string> sw_planners, sw_tasks, sw_variants;
  bool sw_hybrid = false;
  auto* sweep = app.add_subcommand("sweep", "Run a grid of scenarios");
  add_common(sweep, common);
  sweep->add_option("--robots", sw_robots, "Team sizes, e.g. 3,4,5")->delimiter(',');
  sweep->add_option("--planners", sw_planners, "Planners, e.g. fc,ws,mcpp,pm")->delimiter(',');
  sweep->add_option("--tasks", sw_tasks, "Tasks")->delimiter(',');
  sweep->add_option("--variants", sw_variants, "Crowd variants")->delimiter(',');
  sweep->add_flag("--hybrid", sw_hybrid, "Fixed+mobile budget splits instead of the grid axes");

  int pl_robots = 4;
  auto* placement = app.add_subcommand("placement", "Single fixed camera placement study");
  add_common(placement, common);
  placement->add_option("--robots", pl_robots, "Mobile robots next to the camera")->capture_default_str();

  std::optional<int> hm_fixed;
  auto* heat = app.add_subcommand("heatmap", "Observed-region heatmap of a scenario");
  add_common(heat, common);
  heat->add_option("--fixed", hm_fixed, "Fixed cameras placed by the greedy planner");

  std::string corr_input;
  auto* corr = app.add_subcommand("correlate", "Reward versus error correlation");
  add_common(corr, common);
  corr->add_option("--input", corr_input, "Episode CSV (reward, metric columns)")->check(CLI::ExistingFile);

  bool tcp = false, no_info = false;
  std::string host = "127.0.0.1";
  int port = 5555;
  auto* serve = app.add_subcommand("serve-bridge", "Serve the policy bridge");
  add_common(serve, common, false);
  serve->add_flag("--tcp", tcp, "Listen on a TCP socket instead of stdin/stdout");
  serve->add_option("--host", host, "Listen address")->capture_default_str();
  serve->add_option("--port", port, "Listen port")->capture_default_str();
  serve->add_flag("--no-info", no_info, "Omit the ground-truth info channel");

  std::vector<std::string> argv_store{"coopmon"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "coopmon: arguments: " << e.what() << "\n";
    return kConfig;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (name == "gen-map") return cmd_gen_map(common, map_out, out);
    if (name == "simulate") return cmd_simulate(common, sim_robots, !no_records, out);
    if (name == "sweep") return cmd_sweep(common, sw_robots, sw_planners, sw_tasks, sw_variants, sw_hybrid, out);
    if (name == "placement") return cmd_placement(common, pl_robots, out);
    if (name == "heatmap") return cmd_heatmap(common, hm_fixed, out);
    if (name == "correlate") return cmd_correlate(common, corr_input, out);
    if (name == "serve-bridge") return cmd_serve(common, tcp, host, port, no_info, out, err);
  } catch (const StageError& e) {
    err << "coopmon " << name << ": " << e.stage << ": " << e.what() << "\n";
    return e.code;
  } catch (const Error& e) {
    err << "coopmon " << name << ": " << e.what() << "\n";
    return StageError::classify(e);
  } catch (const std::exception& e) {
    err << "coopmon " << name << ": " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace coopmon::cli
