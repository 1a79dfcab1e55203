#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coopmon/grid_world.hpp"
#include "coopmon/navigation.hpp"
#include "coopmon/rng.hpp"

namespace coopmon {

/// Pose and speed of a moving agent.
struct Pose {
  Vec2 p;
  double theta = 0.0;  // [0, 2pi)
  double v = 0.0;
  bool operator==(const Pose&) const = default;
};

using TransitionMatrix = std::vector<std::vector<double>>;

struct Skew {
  int zone = 0;
  double multiplier = 1.0;
};

struct DwellDistribution {
  double mu = 3.4011973816621555;  // ln(30 s)
  double sigma = 0.8;
};

struct CrowdParams {
  int m = 20;
  std::optional<TransitionMatrix> transition_matrix;  // built uniformly when absent
  DwellDistribution dwell;
  double v_max = 1.5;
  double omega_max = kPi / 4.0;
  double lookahead_m = 2.0;
  double buffer_m = 0.5;
  std::optional<Skew> skew;
};

struct GoalVisit {
  int room = 0;
  double dwell_s = 0.0;
  bool operator==(const GoalVisit&) const = default;
};

struct HumanPlan {
  int human_id = 0;
  std::vector<GoalVisit> goal_sequence;
  std::vector<Pose> trajectory;  // poses for t = 0..T
  bool operator==(const HumanPlan&) const = default;
};

/// Row-stochastic room-to-room matrix, uniform over the other rooms. With a
/// skew the columns of rooms in the skewed zone are scaled before each row is
/// renormalized.
TransitionMatrix build_transition_matrix(const GridWorld& world,
                                         const std::optional<Skew>& skew = std::nullopt);

/// Throws ConfigError unless rows sum to 1 within 1e-9 and the diagonal is zero.
void check_transition_matrix(const TransitionMatrix& matrix);

/// exp(N(mu, sigma)) clamped to [1 s, horizon_s].
double sample_dwell(const DwellDistribution& dwell, double horizon_s, Rng& rng);

/// Goal rooms drawn from the Markov chain, starting at a uniformly drawn room.
/// Dwell times are log-normal, truncated to [1 s, horizon_s]; the sequence is
/// extended until total dwell reaches horizon_s.
std::vector<GoalVisit> sample_goal_sequence(const TransitionMatrix& matrix,
                                            const DwellDistribution& dwell, double horizon_s,
                                            Rng& rng);

struct PursuitParams {
  double lookahead_m = 2.0;
  double v_target = 1.5;
  double v_max = 1.5;
  double omega_max = kPi / 4.0;
  double dt = 1.0;
};

/// One pure-pursuit control step along a path. The position advances with the
/// pre-update heading and speed; the new heading turns (rate clamped) toward
/// the path point lookahead_m beyond the projection of that new position. The
/// new speed is at most min(v_target, v_max), reduced near the goal, under
/// residual heading error, and whenever the next move would leave the allowed
/// cells or stray from the path. Moves that would leave the allowed cells keep
/// the position and zero the speed. Reaching the end of the path (projection
/// at the end, within one cell) zeroes the speed.
Pose pure_pursuit_step(const GridWorld& world, const CellMask& allowed, const Pose& state,
                       std::span<const Vec2> path, const PursuitParams& params);

/// Trajectories for params.m humans over t = 0..horizon_steps. Humans spawn in
/// a buffered cell of their first goal room, walk A* paths between room
/// centroids and stand still at each centroid for the sampled dwell.
std::vector<HumanPlan> synthesize_crowd(const GridWorld& world, const CrowdParams& params,
                                        int horizon_steps, double dt, std::uint64_t seed);

/// Human poses at step t, one per plan.
std::vector<Pose> crowd_at(std::span<const HumanPlan> plans, int t);

void write_trajectories(const std::vector<HumanPlan>& plans, const std::filesystem::path& path);
std::vector<HumanPlan> read_trajectories(const std::filesystem::path& path);

}  // namespace coopmon
