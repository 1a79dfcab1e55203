#include "coopmon/sensing.hpp"

#include <cmath>
#include <limits>

#include "coopmon/errors.hpp"

namespace coopmon {

SensorSpec tracking_sensor() { return {}; }

SensorSpec lidar_sensor() {
  SensorSpec s;
  s.fov_rad = kTwoPi;
  s.kind = SensorKind::Lidar;
  return s;
}

SensorSpec camera_sensor() {
  SensorSpec s;
  s.kind = SensorKind::FixedCamera;
  return s;
}

void check_sensor(const SensorSpec& spec) {
  if (!(spec.range_m > 0.0)) throw ConfigError("sensor range must be positive");
  if (!(spec.fov_rad > 0.0 && spec.fov_rad <= kTwoPi + 1e-12)) {
    throw ConfigError("sensor fov must lie in (0, 2pi]");
  }
  if (spec.kind != SensorKind::Lidar && spec.k_samples < 2) {
    throw ConfigError("sensor needs at least 2 occlusion samples");
  }
  if (spec.kind == SensorKind::Lidar && spec.beams < 1) throw ConfigError("lidar needs beams");
}

bool f_vis(const SensorPose& sensor, Vec2 target, const GridWorld& world, const SensorSpec& spec) {
  const Vec2 d = target - sensor.p;
  if (norm(d) > spec.range_m) return false;
  if (spec.fov_rad < kTwoPi && (d.x != 0.0 || d.y != 0.0)) {
    const double bearing = std::abs(wrap_pi(std::atan2(d.y, d.x) - sensor.theta));
    if (bearing > spec.fov_rad / 2.0) return false;
  }
  const int k = spec.k_samples;
  for (int i = 1; i <= k; ++i) {
    const double f = static_cast<double>(i) / (k + 1);
    const Vec2 q = sensor.p + d * f;
    if (!world.in_bounds(q) || !world.is_free(world.cell_of(q))) return false;
  }
  return true;
}

std::vector<int> visible_set(const SensorPose& sensor, std::span<const Pose> humans,
                             const GridWorld& world, const SensorSpec& spec) {
  std::vector<int> out;
  for (std::size_t j = 0; j < humans.size(); ++j) {
    if (f_vis(sensor, humans[j].p, world, spec)) out.push_back(static_cast<int>(j));
  }
  return out;
}

std::vector<CellIndex> sensor_footprint(const SensorPose& sensor, const GridWorld& world,
                                        const SensorSpec& spec) {
  const double cs = world.cell_size();
  const int i0 = std::max(0, static_cast<int>(std::floor((sensor.p.x - spec.range_m) / cs)));
  const int i1 = std::min(world.width_cells() - 1,
                          static_cast<int>(std::floor((sensor.p.x + spec.range_m) / cs)));
  const int j0 = std::max(0, static_cast<int>(std::floor((sensor.p.y - spec.range_m) / cs)));
  const int j1 = std::min(world.height_cells() - 1,
                          static_cast<int>(std::floor((sensor.p.y + spec.range_m) / cs)));
  std::vector<CellIndex> out;
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      if (!world.is_free(i, j)) continue;
      if (f_vis(sensor, world.cell_center({i, j}), world, spec)) out.push_back({i, j});
    }
  }
  return out;
}

double ray_distance(const GridWorld& world, Vec2 p, double angle, double max_range) {
  const double cs = world.cell_size();
  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  CellIndex c = world.cell_of(p);
  if (!world.is_free(c)) return std::min(max_range, 0.0);
  const int step_i = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int step_j = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  constexpr double inf = std::numeric_limits<double>::infinity();
  double t_max_x = inf, t_max_y = inf, t_delta_x = inf, t_delta_y = inf;
  if (step_i != 0) {
    t_max_x = ((c.i + (step_i > 0 ? 1 : 0)) * cs - p.x) / dx;
    t_delta_x = cs / std::abs(dx);
  }
  if (step_j != 0) {
    t_max_y = ((c.j + (step_j > 0 ? 1 : 0)) * cs - p.y) / dy;
    t_delta_y = cs / std::abs(dy);
  }
  while (true) {
    double t;
    if (t_max_x <= t_max_y) {
      t = t_max_x;
      c.i += step_i;
      t_max_x += t_delta_x;
    } else {
      t = t_max_y;
      c.j += step_j;
      t_max_y += t_delta_y;
    }
    if (t >= max_range) return max_range;
    if (!world.is_free(c)) return std::max(t, 0.0);
  }
}

LidarScan lidar_scan(const SensorPose& sensor, const GridWorld& world, const SensorSpec& spec) {
  LidarScan scan;
  scan.distances.resize(static_cast<std::size_t>(spec.beams));
  for (int i = 0; i < spec.beams; ++i) {
    const double angle = sensor.theta + kTwoPi * i / spec.beams;
    scan.distances[i] = ray_distance(world, sensor.p, angle, spec.range_m);
  }
  return scan;
}

HumanMeasurement noisy_measurement(const Pose& truth, Rng& rng, const NoiseModel& noise) {
  HumanMeasurement m;
  m.p.x = gaussian(rng, truth.p.x, noise.sigma_p);
  m.p.y = gaussian(rng, truth.p.y, noise.sigma_p);
  m.theta = wrap_angle(gaussian(rng, truth.theta, noise.sigma_theta));
  m.v = std::max(0.0, gaussian(rng, truth.v, noise.sigma_v));
  return m;
}

}  // namespace coopmon
