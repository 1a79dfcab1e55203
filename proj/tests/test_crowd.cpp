#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "coopmon/crowd.hpp"
#include "coopmon/errors.hpp"
#include "coopmon/eval.hpp"
#include "coopmon/navigation.hpp"
#include "oracles.hpp"

using namespace coopmon;

namespace {

GridWorld open_room(int w_cells, int h_cells) {
  GridWorld w(0.5, w_cells + 2, h_cells + 2);
  for (int j = 0; j < w.height_cells(); ++j)
    for (int i = 0; i < w.width_cells(); ++i) w.set(i, j, Cell::Wall);
  for (int j = 1; j <= h_cells; ++j)
    for (int i = 1; i <= w_cells; ++i) w.set(i, j, Cell::Free);
  w.set_rooms({{0, {0.5, 0.5, 0.5 + w_cells * 0.5, 0.5 + h_cells * 0.5}}}, {{0, {0}}});
  return w;
}

}  // namespace

TEST(Transition, UniformOverOthers) {
  MapParams p;
  p.n_rooms = 3;
  p.width_m = 40;
  p.height_m = 20;
  const GridWorld w = generate_map(2, p);
  ASSERT_EQ(w.rooms().size(), 3u);
  const auto m = build_transition_matrix(w);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) EXPECT_DOUBLE_EQ(m[a][b], a == b ? 0.0 : 0.5);
  }
  EXPECT_NO_THROW(check_transition_matrix(m));
}

TEST(Transition, SkewOfOneIsIdentity) {
  const GridWorld w = reference_map();
  EXPECT_EQ(build_transition_matrix(w, Skew{3, 1.0}), build_transition_matrix(w));
}

TEST(Transition, SkewMatchesMultiplyAndRenormalize) {
  const GridWorld w = reference_map();
  const int zone = 3;
  const auto m = build_transition_matrix(w, Skew{zone, 2.0});
  const std::size_t n = w.rooms().size();
  for (std::size_t a = 0; a < n; ++a) {
    std::vector<double> row(n);
    double sum = 0;
    for (std::size_t b = 0; b < n; ++b) {
      row[b] = a == b ? 0.0 : 1.0 / (n - 1);
      if (w.room_zone()[b] == zone) row[b] *= 2.0;
      sum += row[b];
    }
    for (std::size_t b = 0; b < n; ++b) EXPECT_NEAR(m[a][b], row[b] / sum, 1e-12);
  }
}

TEST(Transition, RejectsBadMatrices) {
  EXPECT_THROW(check_transition_matrix({{0.0, 0.9}, {1.0, 0.0}}), ConfigError);
  EXPECT_THROW(check_transition_matrix({{0.5, 0.5}, {1.0, 0.0}}), ConfigError);
}

TEST(Dwell, ZeroSigmaIsExpMu) {
  Rng rng(1);
  DwellDistribution d{std::log(30.0), 0.0};
  for (int k = 0; k < 10; ++k) EXPECT_NEAR(sample_dwell(d, 500, rng), 30.0, 1e-9);
}

TEST(Dwell, SampleMeanMatchesLogNormalMoment) {
  Rng rng(7);
  DwellDistribution d{std::log(30.0), 0.8};
  const int n = 100000;
  double s = 0, s2 = 0;
  // Horizon high enough that truncation is negligible for this check.
  for (int k = 0; k < n; ++k) {
    const double x = sample_dwell(d, 1e9, rng);
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  const double expected = std::exp(d.mu + d.sigma * d.sigma / 2);
  EXPECT_LT(std::abs(mean - expected), 3 * se);
}

TEST(Dwell, Truncated) {
  Rng rng(3);
  DwellDistribution d{std::log(30.0), 3.0};
  for (int k = 0; k < 1000; ++k) {
    const double x = sample_dwell(d, 100, rng);
    EXPECT_GE(x, 1.0);
    EXPECT_LE(x, 100.0);
  }
}

TEST(GoalSequence, DeterministicChainAlternates) {
  TransitionMatrix m{{0, 1, 0}, {0, 0, 1}, {0, 1, 0}};
  // Rooms 1 and 2 point at each other; start anywhere and the tail alternates.
  Rng rng(4);
  const auto seq = sample_goal_sequence(m, {std::log(10.0), 0.0}, 200, rng);
  ASSERT_GE(seq.size(), 3u);
  for (std::size_t k = 2; k < seq.size(); ++k) EXPECT_EQ(seq[k].room, seq[k - 2].room);
  for (std::size_t k = 1; k < seq.size(); ++k) EXPECT_NE(seq[k].room, seq[k - 1].room);
  double total = 0;
  for (const auto& g : seq) total += g.dwell_s;
  EXPECT_GE(total, 200.0);
}

TEST(AStar, SinglePointPath) {
  const GridWorld w = open_room(20, 20);
  const auto pass = buffered_mask(w, 0.0);
  const auto path = astar_cells(w, pass, {3, 3}, {3, 3});
  EXPECT_EQ(path.cells.size(), 1u);
  EXPECT_DOUBLE_EQ(path.cost_m, 0.0);
}

TEST(AStar, StraightDiagonal) {
  const GridWorld w = open_room(10, 10);
  const auto pass = buffered_mask(w, 0.0);
  const auto path = astar_cells(w, pass, {1, 1}, {8, 8});
  EXPECT_NEAR(path.cost_m, 7 * std::sqrt(2.0) * 0.5, 1e-12);
}

TEST(AStar, MatchesDijkstraOnReferenceMap) {
  const GridWorld w = reference_map();
  const auto pass = buffered_mask(w, 0.5);
  std::vector<CellIndex> cells;
  for (std::size_t k = 0; k < pass.size(); ++k)
    if (pass[k]) cells.push_back(w.unflat(k));
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const CellIndex a = cells[uniform_index(rng, cells.size())];
    const CellIndex b = cells[uniform_index(rng, cells.size())];
    const double expected = oracle::dijkstra_cost(w, pass, a, b);
    const auto path = astar_cells(w, pass, a, b);
    EXPECT_NEAR(path.cost_m, expected, 1e-9);
    EXPECT_EQ(path.cells.front(), a);
    EXPECT_EQ(path.cells.back(), b);
    for (const CellIndex c : path.cells) EXPECT_TRUE(pass[w.flat(c)]);
  }
}

TEST(AStar, NoPathThrows) {
  GridWorld w = open_room(10, 10);
  for (int j = 0; j < w.height_cells(); ++j) w.set(5, j, Cell::Wall);
  EXPECT_THROW(astar_cells(w, buffered_mask(w, 0.0), {2, 2}, {8, 8}), NoPath);
}

TEST(PurePursuit, StraightAlignedPath) {
  const GridWorld w = open_room(60, 10);
  const auto allowed = buffered_mask(w, 0.0);
  std::vector<Vec2> path{{2.0, 3.0}, {28.0, 3.0}};
  Pose s{{5.0, 3.0}, 0.0, 1.0};
  PursuitParams pp;
  pp.v_target = 1.0;
  const Pose n = pure_pursuit_step(w, allowed, s, path, pp);
  EXPECT_NEAR(n.p.x, 6.0, 1e-12);
  EXPECT_NEAR(n.p.y, 3.0, 1e-12);
  EXPECT_NEAR(n.theta, 0.0, 1e-12);
}

TEST(PurePursuit, StopsAtGoal) {
  const GridWorld w = open_room(60, 10);
  const auto allowed = buffered_mask(w, 0.0);
  std::vector<Vec2> path{{2.0, 3.0}, {10.0, 3.0}};
  Pose s{{10.0, 3.0}, 0.0, 0.0};
  const Pose n = pure_pursuit_step(w, allowed, s, path, {});
  EXPECT_DOUBLE_EQ(n.v, 0.0);
}

TEST(PurePursuit, CrossTrackErrorOnAStarPaths) {
  const GridWorld w = reference_map();
  const auto allowed = buffered_mask(w, 0.0);
  const auto buffered = buffered_mask(w, 0.5);
  std::vector<CellIndex> cells;
  for (std::size_t k = 0; k < buffered.size(); ++k)
    if (buffered[k]) cells.push_back(w.unflat(k));
  Rng rng(21);
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto path = astar_cells(w, buffered, cells[uniform_index(rng, cells.size())],
                                  cells[uniform_index(rng, cells.size())]);
    if (path.points.size() < 2) continue;
    Pose s{path.points[0], std::atan2(path.points[1].y - path.points[0].y,
                                      path.points[1].x - path.points[0].x), 0.0};
    s.theta = wrap_angle(s.theta);
    for (int t = 0; t < 400; ++t) {
      s = pure_pursuit_step(w, allowed, s, path.points, {});
      worst = std::max(worst, project_onto_polyline(path.points, s.p).distance);
      EXPECT_TRUE(w.is_free_point(s.p));
    }
  }
  EXPECT_LE(worst, 2 * w.cell_size());
}

TEST(Crowd, EmptyCrowd) {
  CrowdParams p;
  p.m = 0;
  EXPECT_TRUE(synthesize_crowd(reference_map(), p, 500, 1.0, 1).empty());
}

TEST(Crowd, DefaultScaleStaysInFreeSpace) {
  const GridWorld w = reference_map();
  const auto plans = synthesize_crowd(w, {}, 500, 1.0, 1);
  ASSERT_EQ(plans.size(), 20u);
  for (const auto& h : plans) {
    ASSERT_EQ(h.trajectory.size(), 501u);
    for (const Pose& p : h.trajectory) {
      EXPECT_TRUE(w.is_free_point(p.p));
      EXPECT_GE(p.theta, 0.0);
      EXPECT_LT(p.theta, kTwoPi);
      EXPECT_LE(p.v, 1.5 + 1e-12);
    }
    for (std::size_t t = 1; t < h.trajectory.size(); ++t) {
      EXPECT_LE(distance(h.trajectory[t].p, h.trajectory[t - 1].p), 1.5 + 1e-9);
    }
  }
}

TEST(Crowd, Deterministic) {
  const GridWorld w = reference_map();
  EXPECT_EQ(synthesize_crowd(w, {}, 200, 1.0, 5), synthesize_crowd(w, {}, 200, 1.0, 5));
  EXPECT_NE(synthesize_crowd(w, {}, 200, 1.0, 5), synthesize_crowd(w, {}, 200, 1.0, 6));
}

TEST(Crowd, TrajectoryFileRoundTrip) {
  const auto plans = synthesize_crowd(reference_map(), {}, 50, 1.0, 2);
  const auto path = std::filesystem::temp_directory_path() / "coopmon_traj.json";
  write_trajectories(plans, path);
  const auto back = read_trajectories(path);
  ASSERT_EQ(back.size(), plans.size());
  for (std::size_t k = 0; k < plans.size(); ++k) {
    ASSERT_EQ(back[k].trajectory.size(), plans[k].trajectory.size());
    for (std::size_t t = 0; t < plans[k].trajectory.size(); ++t) {
      EXPECT_EQ(back[k].trajectory[t], plans[k].trajectory[t]);
    }
  }
}

TEST(Variants, CrowdParameters) {
  const GridWorld w = reference_map();
  EXPECT_EQ(apply_variant(w, {}, OodVariant::Default).m, 20);
  EXPECT_EQ(apply_variant(w, {}, OodVariant::Sparse).m, 10);
  EXPECT_EQ(apply_variant(w, {}, OodVariant::Crowded).m, 30);
  EXPECT_NEAR(apply_variant(w, {}, OodVariant::LongDwell).dwell.mu, std::log(90.0), 1e-12);
  const auto skewed = apply_variant(w, {}, OodVariant::Skewed);
  ASSERT_TRUE(skewed.skew.has_value());
  EXPECT_EQ(skewed.skew->zone, isolated_zone(w));
  EXPECT_DOUBLE_EQ(skewed.skew->multiplier, 2.0);
}
