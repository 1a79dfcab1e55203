#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <memory>
#include <set>

#include "coopmon/control.hpp"
#include "coopmon/errors.hpp"
#include "coopmon/planners.hpp"
#include "coopmon/simplex.hpp"
#include "oracles.hpp"

using namespace coopmon;

namespace {

GridWorld open_room(double w_m, double h_m) {
  const int wc = static_cast<int>(w_m / 0.5) + 2, hc = static_cast<int>(h_m / 0.5) + 2;
  GridWorld w(0.5, wc, hc);
  for (int j = 0; j < hc; ++j)
    for (int i = 0; i < wc; ++i)
      w.set(i, j, (i == 0 || j == 0 || i == wc - 1 || j == hc - 1) ? Cell::Wall : Cell::Free);
  w.set_rooms({{0, {0.5, 0.5, 0.5 + w_m, 0.5 + h_m}}}, {{0, {0}}});
  return w;
}

// Two 6x6 m rooms with a solid wall between them.
GridWorld two_rooms() {
  GridWorld w(0.5, 28, 14);
  for (int j = 0; j < 14; ++j)
    for (int i = 0; i < 28; ++i) {
      const bool a = i >= 1 && i <= 12 && j >= 1 && j <= 12;
      const bool b = i >= 15 && i <= 26 && j >= 1 && j <= 12;
      w.set(i, j, (a || b) ? Cell::Free : Cell::Wall);
    }
  w.set_rooms({{0, {0.5, 0.5, 6.5, 6.5}}, {1, {7.5, 0.5, 13.5, 6.5}}}, {{0, {0}}, {1, {1}}});
  return w;
}

const double kInf = std::numeric_limits<double>::infinity();

}  // namespace

// ---- fixed cameras ----------------------------------------------------------

TEST(FixedCameras, ConvexRoomCornerCoversEverything) {
  const GridWorld w = open_room(6, 6);
  const std::vector<SensorPose> cands{{{3.5, 3.5}, 0.0}, {{0.75, 0.75}, kPi / 4}};
  const auto place = fc_place(w, 1, camera_sensor(), cands);
  EXPECT_EQ(place.candidate_index[0], 1u);
  EXPECT_EQ(place.gains[0], w.free_cell_count());
}

TEST(FixedCameras, OnePerRoomAcrossWall) {
  const GridWorld w = two_rooms();
  const std::vector<SensorPose> cands{
      {{3.5, 3.5}, 0.0}, {{0.75, 0.75}, kPi / 4}, {{4.0, 4.0}, kPi}, {{7.75, 0.75}, kPi / 4}};
  const auto place = fc_place(w, 2, camera_sensor(), cands);
  std::set<std::size_t> picked(place.candidate_index.begin(), place.candidate_index.end());
  EXPECT_EQ(picked, (std::set<std::size_t>{1, 3}));
  EXPECT_EQ(place.gains[0] + place.gains[1], w.free_cell_count());
}

TEST(FixedCameras, DefaultCandidates) {
  const GridWorld w = reference_map();
  const auto c = default_camera_candidates(w);
  EXPECT_EQ(c.size(), w.rooms().size() * 8);
  EXPECT_EQ(c[1].p, w.rooms()[0].centroid());
  EXPECT_NEAR(c[1].theta, kPi / 4, 1e-12);
}

TEST(FixedCameras, GreedyFirstPickIsExhaustiveArgmaxOnSmallMaps) {
  MapParams p;
  p.width_m = 30;
  p.height_m = 20;
  p.n_rooms = 4;
  p.room_size_min_m = 4;
  p.room_size_max_m = 9;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const GridWorld w = generate_map(seed, p);
    const auto cands = default_camera_candidates(w);
    ASSERT_LE(cands.size(), 32u);
    const auto place = fc_place(w, 4, camera_sensor());
    EXPECT_EQ(place.candidate_index[0], oracle::exhaustive_first_pick(w, cands, camera_sensor()));
    for (std::size_t k = 1; k < place.gains.size(); ++k) EXPECT_LE(place.gains[k], place.gains[k - 1]);
  }
}

TEST(FixedCameras, Errors) {
  const GridWorld w = open_room(6, 6);
  EXPECT_THROW(fc_place(w, 1, camera_sensor(), std::vector<SensorPose>{}), NoCandidates);
  EXPECT_THROW(fc_place(w, 3, camera_sensor(), std::vector<SensorPose>{{{3, 3}, 0.0}}), NoCandidates);
}

// ---- waypoint sampling ------------------------------------------------------

TEST(WaypointSampling, ResamplesAtGoal) {
  const GridWorld w = reference_map();
  EnvParams env;
  env.n_robots = 1;
  Rng spawn = make_rng(1, Stream::Spawn);
  auto robots = spawn_robots(w, 1, 2.0, spawn);
  WaypointSamplingPlanner ws({});
  ws.reset(w, robots, env, 3);
  const Vec2 goal = ws.goals()[0];
  robots[0].p = goal;
  robots[0].v = 0.0;
  const auto cmd = ws.act(1, robots, {});
  EXPECT_NE(ws.goals()[0], goal);
  EXPECT_NE(cmd[0], (ActionCommand{0, 1}));
}

TEST(WaypointSampling, AlignedGoalFullSpeedStraight) {
  const GridWorld w = open_room(30, 10);
  EnvParams env;
  PathTracker tracker({{5, 5}, {15, 5}}, false);
  const AgentState robot{{5, 5}, 0.0, 2.0, std::nullopt};
  EXPECT_EQ(tracker.act(w, robot, 2.0, env), (ActionCommand{2, 1}));
}

TEST(WaypointSampling, RolloutsStayInFreeSpace) {
  auto world = std::make_shared<GridWorld>(reference_map());
  EnvParams env;
  auto crowd = std::make_shared<std::vector<HumanPlan>>(synthesize_crowd(*world, {}, 500, 1.0, 1));
  for (std::uint64_t seed : {1, 2, 3}) {
    auto ws = make_planner({});
    const auto rec = run_episode(world, crowd, env, *ws, seed);
    double travelled = 0;
    for (std::size_t t = 0; t < rec.robots.size(); ++t) {
      for (std::size_t r = 0; r < rec.robots[t].size(); ++r) {
        ASSERT_TRUE(world->is_free_point(rec.robots[t][r].p));
        if (t) travelled += distance(rec.robots[t][r].p, rec.robots[t - 1][r].p);
      }
    }
    EXPECT_GT(travelled, 500.0);  // robots actually move
  }
}

// ---- snapping -----------------------------------------------------------------

TEST(Snap, SpeedNearestTiesDown) {
  const ActionSet a;
  EXPECT_EQ(snap_speed(1.4, a), 1);
  EXPECT_EQ(snap_speed(1.5, a), 1);
  EXPECT_EQ(snap_speed(1.6, a), 2);
  EXPECT_EQ(snap_speed(0.5, a), 0);
  EXPECT_EQ(snap_speed(2.0, a), 2);
}

TEST(Snap, SteerHalfStepGoesStraight) {
  const ActionSet a;
  EXPECT_EQ(snap_steer(0.0, a, 1.0), 1);
  EXPECT_EQ(snap_steer(kPi / 16, a, 1.0), 1);
  EXPECT_EQ(snap_steer(kPi / 16 + 1e-6, a, 1.0), 2);
  EXPECT_EQ(snap_steer(-0.3, a, 1.0), 0);
}

// ---- coverage loops ---------------------------------------------------------

TEST(Mcpp, OpenRoomSingleSimpleCycle) {
  const GridWorld w = open_room(16, 12);
  const auto plan = mcpp_plan(w, 1);
  ASSERT_EQ(plan.loops.size(), 1u);
  const auto& wp = plan.loops[0].waypoints;
  std::set<std::pair<double, double>> distinct;
  for (Vec2 p : wp) distinct.insert({p.x, p.y});
  EXPECT_EQ(distinct.size(), wp.size());
  // Every coarse cell holds at least one waypoint.
  for (double x = 0.5; x < 16.5; x += 4) {
    for (double y = 0.5; y < 12.5; y += 4) {
      bool hit = false;
      for (Vec2 p : wp) hit |= p.x >= x && p.x < x + 4 && p.y >= y && p.y < y + 4;
      EXPECT_TRUE(hit) << x << "," << y;
    }
  }
  EXPECT_TRUE(oracle::closed_polyline_free(w, wp));
}

TEST(Mcpp, TwoRobotsBalanced) {
  const GridWorld w = open_room(32, 16);
  const auto plan = mcpp_plan(w, 2);
  ASSERT_EQ(plan.loops.size(), 2u);
  const double a = loop_length(plan.loops[0].waypoints), b = loop_length(plan.loops[1].waypoints);
  EXPECT_LE(std::abs(a - b), 0.1 * std::max(a, b));
}

TEST(Mcpp, ReferenceMapCoverage) {
  const GridWorld w = reference_map();
  const auto plan = mcpp_plan(w, 5);
  ASSERT_EQ(plan.loops.size(), 5u);
  std::vector<Vec2> all;
  for (const auto& l : plan.loops) {
    EXPECT_GE(l.waypoints.size(), 3u);
    EXPECT_TRUE(oracle::closed_polyline_free(w, l.waypoints));
    EXPECT_NEAR(l.length_m, loop_length(l.waypoints), 1e-9);
    all.insert(all.end(), l.waypoints.begin(), l.waypoints.end());
  }
  const double cov = oracle::coverage_fraction(w, all, 10.0);
  EXPECT_GE(cov, 0.99);
  EXPECT_NEAR(plan.coverage, cov, 1e-12);
}

TEST(Mcpp, CoverageGapReported) {
  McppPlan plan;
  plan.gap_cells = {{1, 1}, {2, 2}};
  EXPECT_THROW(require_coverage(plan), CoverageGap);
  plan.gap_cells.clear();
  EXPECT_NO_THROW(require_coverage(plan));
}

// ---- persistent monitoring LP ---------------------------------------------

TEST(PmLp, UnconstrainedIsFullSpeed) {
  const std::vector<double> len{30, 20, 50};
  const auto s = pm_speeds(len, 2.0);
  EXPECT_EQ(s.period_s, 50.0);
  for (double v : s.speeds) EXPECT_EQ(v, 2.0);
}

TEST(PmLp, CappedSegment) {
  const std::vector<double> len{50, 50};
  PmConstraints c;
  c.caps = {1.0, kInf};
  const auto s = pm_speeds(len, 2.0, c);
  EXPECT_NEAR(s.period_s, 75.0, 1e-9);
}

TEST(PmLp, RandomInstancesMatchGridSearch) {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 4 + uniform_index(rng, 16);
    std::vector<double> len(n), caps(n);
    for (std::size_t k = 0; k < n; ++k) {
      len[k] = uniform(rng, 1, 20);
      caps[k] = uniform(rng, 0, 1) < 0.3 ? uniform(rng, 0.5, 2.0) : kInf;
    }
    PmConstraints con;
    con.caps = caps;
    double expected = 0;
    std::vector<bool> grouped(n, false);
    for (std::size_t start = 0; start + 3 <= n && con.regions.size() < 3; start += 5) {
      oracle::GroupInstance g;
      PmRegion region;
      double base = 0;
      for (std::size_t k = start; k < start + 3; ++k) {
        region.segments.push_back(static_cast<int>(k));
        g.lengths.push_back(len[k]);
        g.caps.push_back(std::min(2.0, caps[k]));
        base += len[k] / std::min(2.0, caps[k]);
        grouped[k] = true;
      }
      region.min_time_s = base * uniform(rng, 0.8, 2.0);
      g.min_time = region.min_time_s;
      con.regions.push_back(region);
      expected += oracle::grid_search_group(g, 41);
    }
    for (std::size_t k = 0; k < n; ++k)
      if (!grouped[k]) expected += len[k] / std::min(2.0, caps[k]);
    const auto s = pm_speeds(len, 2.0, con);
    EXPECT_LE(std::abs(s.period_s - expected), 0.01 * expected) << trial;
    double period = 0;
    for (std::size_t k = 0; k < n; ++k) {
      EXPECT_LE(s.speeds[k], std::min(2.0, caps[k]) + 1e-9);
      period += len[k] / s.speeds[k];
    }
    EXPECT_NEAR(period, s.period_s, 1e-9 * period);
  }
}

TEST(PmLp, InfeasiblePeriodCap) {
  const std::vector<double> len{50, 50};
  PmConstraints c;
  c.max_period_s = 40;  // 100 m at 2 m/s needs 50 s
  EXPECT_THROW(pm_speeds(len, 2.0, c), Infeasible);
  c.max_period_s = 60;
  c.regions = {{{0}, 30.0}};
  EXPECT_NO_THROW(pm_speeds(len, 2.0, c));
  c.regions = {{{0}, 45.0}};
  EXPECT_THROW(pm_speeds(len, 2.0, c), Infeasible);
}

TEST(Simplex, SmallProgram) {
  // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6
  const auto r = solve_lp({-1, -1}, {{{1, 2}, Relation::LessEq, 4}, {{3, 1}, Relation::LessEq, 6}});
  ASSERT_EQ(r.status, LpResult::Status::Optimal);
  EXPECT_NEAR(r.objective, -2.8, 1e-12);
  const auto bad = solve_lp({1}, {{{1}, Relation::GreaterEq, 2}, {{1}, Relation::LessEq, 1}});
  EXPECT_EQ(bad.status, LpResult::Status::Infeasible);
}

// ---- loop following -------------------------------------------------------

TEST(LoopFollow, StraightSegmentFullSpeed) {
  const GridWorld w = open_room(30, 30);
  EnvParams env;
  PathTracker tracker({{5, 5}, {25, 5}, {25, 25}, {5, 25}}, true);
  tracker.start();
  const AgentState robot{{6, 5}, 0.0, 2.0, std::nullopt};
  EXPECT_EQ(tracker.act(w, robot, 2.0, env), (ActionCommand{2, 1}));
}

TEST(LoopFollow, RevisitGapsWithinCertifiedPeriod) {
  auto world = std::make_shared<GridWorld>(reference_map());
  EnvParams env;
  // Long enough for several laps of the longest loop.
  env.horizon = 1500;
  auto crowd = std::make_shared<std::vector<HumanPlan>>(synthesize_crowd(*world, {}, 1500, 1.0, 1));
  PlannerOptions opt;
  opt.kind = PlannerKind::PM;
  LoopPlanner pm(opt);
  const auto rec = run_episode(world, crowd, env, pm, 7);
  int checked = 0;
  for (std::size_t l = 0; l < pm.plan().loops.size(); ++l) {
    const auto& loop = pm.plan().loops[l];
    ASSERT_GE(loop.robot, 0);
    std::vector<Vec2> trace;
    for (const auto& step : rec.robots) trace.push_back(step[loop.robot].p);
    const double period = pm.speeds()[l].period_s;
    // Skip the approach: start once the robot first reaches the loop.
    int first = 0;
    while (first < static_cast<int>(trace.size()) &&
           project_onto_polyline(loop.waypoints, trace[first]).distance > 1.0)
      ++first;
    // One step of travel at full speed is the finest the log resolves.
    const double gap = oracle::max_revisit_gap(loop.waypoints, trace, env.v_max * env.dt, first);
    EXPECT_LE(gap, 1.5 * period) << "loop " << l;
    std::printf("loop %zu period %.1f gap %.1f\n", l, period, gap);
    ++checked;
  }
  EXPECT_GT(checked, 0);
}
