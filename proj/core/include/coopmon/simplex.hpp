#pragma once

#include <vector>

namespace coopmon {

enum class Relation { LessEq, GreaterEq, Equal };

struct LinearConstraint {
  std::vector<double> a;
  Relation rel = Relation::LessEq;
  double b = 0.0;
};

struct LpResult {
  enum class Status { Optimal, Infeasible, Unbounded } status = Status::Optimal;
  std::vector<double> x;
  double objective = 0.0;
};

/// Minimises c.x subject to the constraints and x >= 0 (dense two-phase
/// simplex, Bland's rule).
LpResult solve_lp(const std::vector<double>& c, const std::vector<LinearConstraint>& constraints);

}  // namespace coopmon
