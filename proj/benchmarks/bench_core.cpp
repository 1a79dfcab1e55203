#include <benchmark/benchmark.h>

#include "coopmon/bridge.hpp"
#include "coopmon/eval.hpp"
#include "coopmon/navigation.hpp"
#include "coopmon/sensing.hpp"

using namespace coopmon;

namespace {

PreparedEpisode reference_episode(int horizon) {
  ScenarioSpec spec;
  spec.env.horizon = horizon;
  spec.planner.kind = PlannerKind::External;
  return prepare_seeded(spec, 3);
}

}  // namespace

static void BM_EnvStep(benchmark::State& state) {
  const PreparedEpisode ep = reference_episode(500);
  auto sim = SimState::reset(ep.world, ep.crowd, ep.env, ep.seed).first;
  const std::vector<ActionCommand> cmds(ep.env.n_robots, ActionCommand{1, 1});
  for (auto _ : state) {
    if (sim.t() == ep.env.horizon) {
      state.PauseTiming();
      sim = SimState::reset(ep.world, ep.crowd, ep.env, ep.seed).first;
      state.ResumeTiming();
    }
    benchmark::DoNotOptimize(sim.step(cmds));
  }
}
BENCHMARK(BM_EnvStep);

static void BM_FVis(benchmark::State& state) {
  const GridWorld w = reference_map();
  const SensorSpec spec = tracking_sensor();
  Rng rng(1);
  std::vector<std::pair<SensorPose, Vec2>> pairs;
  while (pairs.size() < 1024) {
    const Vec2 p{uniform(rng, 0, w.width_m()), uniform(rng, 0, w.height_m())};
    const Vec2 q{p.x + uniform(rng, -8, 8), p.y + uniform(rng, -8, 8)};
    if (w.is_free_point(p) && w.in_bounds(q)) pairs.push_back({{p, uniform(rng, 0, kTwoPi)}, q});
  }
  std::size_t k = 0;
  for (auto _ : state) {
    const auto& [s, q] = pairs[k++ & 1023];
    benchmark::DoNotOptimize(f_vis(s, q, w, spec));
  }
}
BENCHMARK(BM_FVis);

static void BM_AStarAcrossMap(benchmark::State& state) {
  const GridWorld w = reference_map();
  const Vec2 a = w.rooms().front().centroid(), b = w.rooms().back().centroid();
  for (auto _ : state) benchmark::DoNotOptimize(astar_path(w, a, b, 0.5));
}
BENCHMARK(BM_AStarAcrossMap)->Unit(benchmark::kMicrosecond);

static void BM_BridgeBatchStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  RunConfig cfg = default_config();
  BridgeSession session(cfg);
  std::string reset = R"({"type":"reset","envs":[)";
  for (int k = 0; k < n; ++k) reset += (k ? "," : "") + std::string(R"({"seed":)") + std::to_string(k + 1) + "}";
  reset += "]}";
  session.handle(reset);
  std::string step = R"({"type":"step","envs":[)";
  for (int k = 0; k < n; ++k)
    step += (k ? "," : "") + std::string(R"({"env_id":)") + std::to_string(k) +
            R"(,"actions":[[1,1],[1,1],[1,1],[1,1],[1,1]]})";
  step += "]}";
  int t = 0;
  for (auto _ : state) {
    if (++t == cfg.scenario.env.horizon) {
      state.PauseTiming();
      session.handle(reset);
      t = 1;
      state.ResumeTiming();
    }
    benchmark::DoNotOptimize(session.handle(step));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_BridgeBatchStep)->Arg(1)->Arg(250)->Unit(benchmark::kMillisecond);

static void BM_FullEpisode(benchmark::State& state) {
  ScenarioSpec spec;
  spec.planner.kind = PlannerKind::WS;
  int e = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_scenario_episode(spec, e++));
}
BENCHMARK(BM_FullEpisode)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
