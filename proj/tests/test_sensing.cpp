#include <gtest/gtest.h>

#include <cmath>

#include "coopmon/sensing.hpp"
#include "oracles.hpp"

using namespace coopmon;

namespace {

GridWorld open_square(double side_m) {
  const int n = static_cast<int>(side_m / 0.5) + 2;
  GridWorld w(0.5, n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      w.set(i, j, (i == 0 || j == 0 || i == n - 1 || j == n - 1) ? Cell::Wall : Cell::Free);
  w.set_rooms({{0, {0.5, 0.5, 0.5 + side_m, 0.5 + side_m}}}, {{0, {0}}});
  return w;
}

}  // namespace

TEST(FVis, AheadInOpenRoom) {
  const GridWorld w = open_square(20);
  EXPECT_TRUE(f_vis({{10, 10}, 0.0}, {11, 10}, w, tracking_sensor()));
}

TEST(FVis, RangeGate) {
  const GridWorld w = open_square(30);
  SensorSpec s = tracking_sensor();
  s.fov_rad = kTwoPi;
  EXPECT_FALSE(f_vis({{5, 10}, 0.0}, {16, 10}, w, s));
  EXPECT_TRUE(f_vis({{5, 10}, 0.0}, {15, 10}, w, s));  // boundary inclusive
}

TEST(FVis, FieldOfViewGate) {
  const GridWorld w = open_square(20);
  const SensorSpec s = tracking_sensor();
  EXPECT_FALSE(f_vis({{10, 10}, 0.0}, {7, 10}, w, s));
  EXPECT_TRUE(f_vis({{10, 10}, 0.0}, {13, 12}, w, s));
  EXPECT_FALSE(f_vis({{10, 10}, 0.0}, {10, 13}, w, s));
}

TEST(FVis, WallBlocks) {
  GridWorld w = open_square(20);
  for (int j = 1; j < w.height_cells() - 1; ++j) {
    w.set(24, j, Cell::Wall);  // x in [12, 13)
    w.set(25, j, Cell::Wall);
  }
  EXPECT_FALSE(f_vis({{10, 10}, 0.0}, {15, 10}, w, tracking_sensor()));
}

TEST(FVis, ThinWallBetweenSamplesIsSkipped) {
  GridWorld w = open_square(20);
  for (int j = 1; j < w.height_cells() - 1; ++j) w.set(24, j, Cell::Wall);  // x in [12, 12.5)
  // Samples at 10 + 5i/6 land at 11.67 and 12.5, straddling the wall.
  EXPECT_TRUE(f_vis({{10, 10}, 0.0}, {15, 10}, w, tracking_sensor()));
  EXPECT_FALSE(oracle::dense_ray_march({{10, 10}, 0.0}, {15, 10}, w, tracking_sensor(), 0.125).visible);
}

TEST(VisibleSet, EmptyAndBehind) {
  const GridWorld w = open_square(20);
  const SensorPose s{{10, 10}, 0.0};
  EXPECT_TRUE(visible_set(s, {}, w, tracking_sensor()).empty());
  std::vector<Pose> behind{{{5, 10}}, {{8, 9}}, {{7, 12}}};
  EXPECT_TRUE(visible_set(s, behind, w, tracking_sensor()).empty());
}

TEST(VisibleSet, MatchesElementwiseFVis) {
  const GridWorld w = reference_map();
  Rng rng(3);
  for (int scene = 0; scene < 200; ++scene) {
    const SensorPose s{{uniform(rng, 0.5, 79.5), uniform(rng, 0.5, 39.5)}, uniform(rng, 0, kTwoPi)};
    std::vector<Pose> humans;
    for (int k = 0; k < 20; ++k) {
      humans.push_back({{std::clamp(s.p.x + uniform(rng, -10, 10), 0.0, 80.0),
                         std::clamp(s.p.y + uniform(rng, -10, 10), 0.0, 40.0)}});
    }
    std::vector<int> expected;
    for (int k = 0; k < 20; ++k)
      if (f_vis(s, humans[k].p, w, tracking_sensor())) expected.push_back(k);
    EXPECT_EQ(visible_set(s, humans, w, tracking_sensor()), expected);
  }
}

// In-range pairs: every disagreement must be a wall run shorter than the
// gap between consecutive samples.
TEST(FVis, DenseMarchDisagreementsAreThinWalls) {
  const GridWorld w = reference_map();
  const SensorSpec spec = tracking_sensor();
  Rng rng(11);
  int disagreements = 0, unexplained = 0, n = 0;
  while (n < 2000) {
    const Vec2 p{uniform(rng, 0.5, 79.5), uniform(rng, 0.5, 39.5)};
    if (!w.is_free_point(p)) continue;
    const double r = spec.range_m * std::sqrt(uniform(rng, 0, 1)), a = uniform(rng, 0, kTwoPi);
    const Vec2 q{p.x + r * std::cos(a), p.y + r * std::sin(a)};
    if (!w.in_bounds(q) || !w.is_free_point(q)) continue;
    const SensorPose s{p, wrap_angle(a + uniform(rng, -0.6, 0.6))};
    ++n;
    const auto dense = oracle::dense_ray_march(s, q, w, spec, w.cell_size() / 4);
    if (dense.visible == f_vis(s, q, w, spec)) continue;
    ++disagreements;
    if (dense.blocked_run >= r / (spec.k_samples + 1)) ++unexplained;
  }
  EXPECT_GT(disagreements, 0);
  EXPECT_EQ(unexplained, 0);
}

// Uniform placements over free space: the thin-wall rate stays within 2%.
TEST(FVis, DenseMarchAgreementUniformPlacement) {
  const SensorSpec spec = tracking_sensor();
  Rng rng(12);
  int disagreements = 0, n = 0, in_range = 0;
  for (std::uint64_t seed = 100; seed < 104; ++seed) {
    const GridWorld w = generate_map(seed);
    for (int k = 0; k < 500;) {
      const Vec2 p{uniform(rng, 0, 80), uniform(rng, 0, 40)};
      const Vec2 q{uniform(rng, 0, 80), uniform(rng, 0, 40)};
      if (!w.is_free_point(p) || !w.is_free_point(q)) continue;
      ++k;
      ++n;
      const SensorPose s{p, uniform(rng, 0, kTwoPi)};
      const auto dense = oracle::dense_ray_march(s, q, w, spec, w.cell_size() / 4);
      if (!dense.gated) ++in_range;
      if (dense.visible != f_vis(s, q, w, spec)) ++disagreements;
    }
  }
  EXPECT_GT(in_range, 0);
  EXPECT_LE(disagreements, n * 2 / 100);
}

TEST(Footprint, MatchesCellwiseFVis) {
  const GridWorld w = reference_map();
  const SensorPose s{w.rooms()[2].centroid(), 1.0};
  EXPECT_EQ(sensor_footprint(s, w, tracking_sensor()).size(),
            oracle::dense_footprint_size(s, w, tracking_sensor()));
}

TEST(Lidar, OpenAreaCapsAtRange) {
  const GridWorld w = open_square(40);
  const auto scan = lidar_scan({{20, 20}, 0.3}, w, lidar_sensor());
  ASSERT_EQ(scan.distances.size(), 16u);
  for (double d : scan.distances) EXPECT_DOUBLE_EQ(d, 10.0);
}

TEST(Lidar, FlatWallAtTwoMeters) {
  const GridWorld w = open_square(20);
  // Interior wall face at x = 20.5 (border cell starts there).
  const auto scan = lidar_scan({{18.5, 10}, 0.0}, w, lidar_sensor());
  EXPECT_NEAR(scan.distances[0], 2.0, w.cell_size());
}

TEST(Lidar, RandomPosesMatchFineMarch) {
  const GridWorld w = reference_map();
  const SensorSpec spec = lidar_sensor();
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec2 p{uniform(rng, 0.5, 79.5), uniform(rng, 0.5, 39.5)};
    if (!w.is_free_point(p)) continue;
    const SensorPose s{p, uniform(rng, 0, kTwoPi)};
    const auto scan = lidar_scan(s, w, spec);
    for (int b = 0; b < spec.beams; ++b) {
      const double ang = s.theta + kTwoPi * b / spec.beams;
      double d = 0;
      const double step = w.cell_size() / 50;
      while (d < spec.range_m) {
        const Vec2 q{p.x + (d + step) * std::cos(ang), p.y + (d + step) * std::sin(ang)};
        const int i = static_cast<int>(std::floor(q.x / w.cell_size()));
        const int j = static_cast<int>(std::floor(q.y / w.cell_size()));
        if (!w.is_free(i, j)) break;
        d += step;
      }
      EXPECT_NEAR(scan.distances[b], std::min(d, spec.range_m), w.cell_size());
    }
  }
}

TEST(Noise, NoiselessEqualsTruth) {
  Rng rng(1);
  const Pose truth{{3, 4}, 1.0, 0.7};
  const auto m = noisy_measurement(truth, rng, {0, 0, 0});
  EXPECT_EQ(m.p, truth.p);
  EXPECT_EQ(m.theta, truth.theta);
  EXPECT_EQ(m.v, truth.v);
}

TEST(Noise, PositionSpread) {
  Rng rng(2);
  const Pose truth{{3, 4}, 1.0, 0.7};
  const int n = 100000;
  double sx = 0, sx2 = 0, sy = 0, sy2 = 0;
  for (int k = 0; k < n; ++k) {
    const auto m = noisy_measurement(truth, rng, {});
    sx += m.p.x;
    sx2 += m.p.x * m.p.x;
    sy += m.p.y;
    sy2 += m.p.y * m.p.y;
  }
  const double stdx = std::sqrt(sx2 / n - (sx / n) * (sx / n));
  const double stdy = std::sqrt(sy2 / n - (sy / n) * (sy / n));
  EXPECT_GE(stdx, 0.19);
  EXPECT_LE(stdx, 0.21);
  EXPECT_GE(stdy, 0.19);
  EXPECT_LE(stdy, 0.21);
}

TEST(Noise, HeadingWrapsAndSpeedNonNegative) {
  Rng rng(4);
  const Pose truth{{3, 4}, kTwoPi - 1e-3, 0.0};
  for (int k = 0; k < 1000; ++k) {
    const auto m = noisy_measurement(truth, rng, {0.2, 0.5, 0.5});
    EXPECT_GE(m.theta, 0.0);
    EXPECT_LT(m.theta, kTwoPi);
    EXPECT_GE(m.v, 0.0);
  }
}
