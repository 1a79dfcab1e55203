#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "coopmon/belief.hpp"
#include "coopmon/errors.hpp"
#include "coopmon/rng.hpp"

using namespace coopmon;

namespace {

// Three disjoint rooms (three zones) joined by a corridor along y in [9, 11].
GridWorld three_rooms() {
  GridWorld w(0.5, 64, 24);
  for (int j = 0; j < 24; ++j)
    for (int i = 0; i < 64; ++i) w.set(i, j, Cell::Wall);
  auto carve = [&](Rect r) {
    for (int j = 0; j < 24; ++j)
      for (int i = 0; i < 64; ++i)
        if (r.contains(w.cell_center({i, j}))) w.set(i, j, Cell::Free);
  };
  const Rect a{1, 1, 9, 9}, b{12, 1, 20, 9}, c{23, 1, 31, 9};
  carve(a);
  carve(b);
  carve(c);
  carve({1, 9, 31, 11});
  w.set_rooms({{0, a}, {1, b}, {2, c}}, {{0, {0}}, {1, {1}}, {2, {2}}});
  return w;
}

const Vec2 kZone0{5, 5}, kZone1{16, 5}, kZone2{27, 5}, kCorridor{15, 10};

}  // namespace

TEST(BeliefInit, InformedAndUninformed) {
  const GridWorld w = three_rooms();
  const std::vector<Vec2> init{{3, 4}, kZone1};
  const auto informed = init_belief(w, init, BeliefInit::Informed);
  EXPECT_EQ(informed.p[0], (Vec2{3, 4}));
  EXPECT_EQ(informed.last_seen[0], 0);
  const auto blind = init_belief(w, init, BeliefInit::Uninformed);
  EXPECT_EQ(blind.p[0], w.center());
  EXPECT_EQ(blind.last_seen[1], -1);
  const auto flow = init_flow_belief(w, init, BeliefInit::Informed);
  EXPECT_EQ(flow.cur_zone[1], 1);
}

TEST(BeliefInit, UninformedOnReferenceSizedMapIsCentre) {
  GridWorld w(0.5, 160, 80);
  const std::vector<Vec2> init(20, Vec2{1, 1});
  for (Vec2 p : init_belief(w, init, BeliefInit::Uninformed).p) EXPECT_EQ(p, (Vec2{40, 20}));
}

TEST(PositionUpdate, EmptyVisibleSetChangesNothing) {
  const GridWorld w = three_rooms();
  auto b = init_belief(w, std::vector<Vec2>{kZone0, kZone1}, BeliefInit::Informed);
  const auto before = b;
  const std::vector<Vec2> obs{{9, 9}, {9, 9}};
  const auto deltas = update_position_belief(b, {}, obs, 3);
  EXPECT_EQ(b, before);
  for (double d : deltas) EXPECT_EQ(d, 0.0);
}

TEST(PositionUpdate, LOneDelta) {
  PositionBelief b{{{0, 0}}, {-1}};
  const std::vector<int> vis{0};
  const std::vector<Vec2> obs{{3, 4}};
  const auto deltas = update_position_belief(b, vis, obs, 2);
  EXPECT_DOUBLE_EQ(deltas[0], 7.0);
  EXPECT_EQ(b.p[0], (Vec2{3, 4}));
  EXPECT_EQ(b.last_seen[0], 2);
}

TEST(Occupancy, Counts) {
  const GridWorld w = three_rooms();
  EXPECT_EQ(estimate_occupancy(std::vector<Vec2>(20, kZone1), w), (std::vector<int>{0, 20, 0}));
  EXPECT_EQ(estimate_occupancy(std::vector<Vec2>(5, kCorridor), w), (std::vector<int>{0, 0, 0}));
}

TEST(Flow, ZoneChangeRecorded) {
  const GridWorld w = three_rooms();
  auto f = init_flow_belief(w, std::vector<Vec2>{kZone1}, BeliefInit::Informed);
  const std::vector<int> vis{0};
  EXPECT_EQ(update_flow_belief(f, vis, std::vector<Vec2>{kZone2}, w, 4), 1);
  EXPECT_EQ(f.at(1, 2), 1);
  EXPECT_EQ(f.prev_zone[0], 1);
  EXPECT_EQ(f.cur_zone[0], 2);
  EXPECT_EQ(f.tau[0], 4);
}

TEST(Flow, CorridorDoesNotClearZone) {
  const GridWorld w = three_rooms();
  auto f = init_flow_belief(w, std::vector<Vec2>{kZone1}, BeliefInit::Informed);
  const std::vector<int> vis{0};
  update_flow_belief(f, vis, std::vector<Vec2>{kCorridor}, w, 1);
  update_flow_belief(f, vis, std::vector<Vec2>{kZone1}, w, 2);
  for (long c : f.flow) EXPECT_EQ(c, 0);
  EXPECT_EQ(f.cur_zone[0], 1);
}

TEST(Flow, UninformedFirstSightingOnlySetsZone) {
  const GridWorld w = three_rooms();
  auto f = init_flow_belief(w, std::vector<Vec2>{kZone1}, BeliefInit::Uninformed);
  const std::vector<int> vis{0};
  EXPECT_EQ(update_flow_belief(f, vis, std::vector<Vec2>{kZone0}, w, 1), 0);
  EXPECT_EQ(f.cur_zone[0], 0);
}

TEST(Reward, Arithmetic) {
  const RewardClip clip;
  const std::vector<double> same{1, 2, 3};
  EXPECT_EQ(reward(Task::Occupancy, same, same, clip), 0.0);
  EXPECT_EQ(reward(Task::Occupancy, std::vector<double>{3, 2}, std::vector<double>{2, 3}, clip), 2.0);
  // One human whose belief jumps 7 m (L1) is capped per component.
  EXPECT_EQ(reward(Task::Tracking, std::vector<double>{0, 0}, std::vector<double>{3, 4}, clip), 5.0);
  const RewardClip off{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  EXPECT_EQ(reward(Task::Tracking, std::vector<double>{0, 0}, std::vector<double>{3, 4}, off), 7.0);
  // Total cap.
  const std::vector<double> far{10, 10, 10, 10, 10, 10};
  EXPECT_EQ(reward(Task::Tracking, std::vector<double>(6, 0.0), far, clip), 10.0);
  EXPECT_THROW(reward(Task::Tracking, std::vector<double>{0}, std::vector<double>{1, 2}, clip),
               ShapeMismatch);
}

TEST(TeamBelief, NoChangeNoReward) {
  const GridWorld w = three_rooms();
  const std::vector<Vec2> init{kZone0, kZone1};
  TeamBelief b(w, init, BeliefInit::Informed);
  const auto r = b.observe({}, init, 1, {});
  EXPECT_EQ(r, (std::array<double, 3>{0, 0, 0}));
  const std::vector<int> vis{0, 1};
  EXPECT_EQ(b.observe(vis, init, 2, {}), (std::array<double, 3>{0, 0, 0}));
}

TEST(TeamBelief, RewardsPerTask) {
  const GridWorld w = three_rooms();
  TeamBelief b(w, std::vector<Vec2>{kZone0}, BeliefInit::Informed);
  const std::vector<int> vis{0};
  const auto r = b.observe(vis, std::vector<Vec2>{kZone2}, 1, {});
  EXPECT_EQ(r[0], 5.0);  // 22 m move, clipped
  EXPECT_EQ(r[1], 2.0);  // one count leaves zone 0, one enters zone 2
  EXPECT_EQ(r[2], 1.0);  // one transition recorded
}

TEST(TeamBelief, TrackingRewardSumsClippedDeltas) {
  const GridWorld w = three_rooms();
  Rng rng(3);
  const int m = 6;
  std::vector<Vec2> pos(m);
  for (auto& p : pos) p = {uniform(rng, 1, 31), uniform(rng, 1, 9)};
  TeamBelief b(w, pos, BeliefInit::Informed);
  double env_sum = 0, oracle_sum = 0;
  std::vector<Vec2> belief = pos;
  for (int t = 1; t <= 200; ++t) {
    std::vector<int> vis;
    std::vector<Vec2> obs(m);
    for (int j = 0; j < m; ++j) {
      obs[j] = {uniform(rng, 1, 31), uniform(rng, 1, 9)};
      if (uniform(rng, 0, 1) < 0.4) vis.push_back(j);
    }
    env_sum += b.observe(vis, obs, t, {})[0];
    double step = 0;
    for (int j : vis) {
      step += std::min(l1_distance(obs[j], belief[j]), 5.0);
      belief[j] = obs[j];
    }
    oracle_sum += std::min(step, 10.0);
  }
  EXPECT_NEAR(env_sum, oracle_sum, 1e-9);
}

TEST(Metrics, PerfectBeliefIsZero) {
  const GridWorld w = three_rooms();
  const std::vector<std::vector<Vec2>> truth{{kZone0, kZone1}, {kZone1, kZone2}, {kZone2, kZone0}};
  EXPECT_EQ(tracking_error(truth, truth), 0.0);
  EXPECT_EQ(occupancy_error(truth, truth, w), 0.0);
  const auto flow = true_flow(truth, w);
  EXPECT_EQ(flow_error(flow, truth, w), 0.0);
}

TEST(Metrics, FrozenBelief) {
  const std::vector<std::vector<Vec2>> belief(5, {{0, 0}});
  const std::vector<std::vector<Vec2>> truth(5, {{3, 4}});
  EXPECT_DOUBLE_EQ(tracking_error(belief, truth), 5.0);
}

TEST(Metrics, TrueFlowIgnoresCorridor) {
  const GridWorld w = three_rooms();
  const std::vector<std::vector<Vec2>> trace{{kZone0}, {kCorridor}, {kZone0}, {kCorridor}, {kZone2}};
  const auto flow = true_flow(trace, w);
  long total = 0;
  for (long c : flow) total += c;
  EXPECT_EQ(total, 1);
  EXPECT_EQ(flow[0 * 3 + 2], 1);
}

TEST(Tasks, Names) {
  for (Task t : kAllTasks) EXPECT_EQ(parse_task(task_name(t)), t);
  EXPECT_THROW(parse_task("bogus"), ConfigError);
}
