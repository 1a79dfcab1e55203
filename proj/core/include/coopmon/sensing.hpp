#pragma once

#include <span>
#include <vector>

#include "coopmon/crowd.hpp"
#include "coopmon/grid_world.hpp"
#include "coopmon/rng.hpp"

namespace coopmon {

enum class SensorKind { Tracking, Lidar, FixedCamera };

struct SensorSpec {
  double range_m = 10.0;
  double fov_rad = kPi / 2.0;  // full opening angle
  int k_samples = 5;
  int beams = 16;  // lidar only
  SensorKind kind = SensorKind::Tracking;
};

SensorSpec tracking_sensor();
SensorSpec lidar_sensor();
SensorSpec camera_sensor();
void check_sensor(const SensorSpec& spec);

/// Position and heading of a sensor (robot or fixed camera).
struct SensorPose {
  Vec2 p;
  double theta = 0.0;
  bool operator==(const SensorPose&) const = default;
};

/// Range gate, field-of-view gate (boundary inclusive, skipped for a full
/// circle) and line of sight: the k interior points at i/(k+1) of the segment
/// must all lie in free cells.
bool f_vis(const SensorPose& sensor, Vec2 target, const GridWorld& world, const SensorSpec& spec);

/// Indices j with f_vis(sensor, humans[j]) == 1, ascending.
std::vector<int> visible_set(const SensorPose& sensor, std::span<const Pose> humans,
                             const GridWorld& world, const SensorSpec& spec);

/// Free cells whose centre passes f_vis from the sensor pose.
std::vector<CellIndex> sensor_footprint(const SensorPose& sensor, const GridWorld& world,
                                        const SensorSpec& spec);

struct LidarScan {
  std::vector<double> distances;  // beam i at theta + 2*pi*i/L
  bool operator==(const LidarScan&) const = default;
};

/// Distance along each beam to the boundary of the first wall cell, capped at range.
LidarScan lidar_scan(const SensorPose& sensor, const GridWorld& world, const SensorSpec& spec);

/// Distance along a ray from p to the first wall cell it enters, capped at max_range.
double ray_distance(const GridWorld& world, Vec2 p, double angle, double max_range);

struct NoiseModel {
  double sigma_p = 0.2;
  double sigma_theta = 0.1;
  double sigma_v = 0.1;
};

struct HumanMeasurement {
  Vec2 p;
  double theta = 0.0;
  double v = 0.0;
  bool operator==(const HumanMeasurement&) const = default;
};

/// p + N(0, sp^2 I), wrap(theta + N(0, st^2)), max(0, v + N(0, sv^2)). Draws x, y,
/// theta, v in that order.
HumanMeasurement noisy_measurement(const Pose& truth, Rng& rng, const NoiseModel& noise);

}  // namespace coopmon
