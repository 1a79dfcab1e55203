#include "coopmon/simplex.hpp"

#include <cmath>
#include <limits>

namespace coopmon {

namespace {

constexpr double kEps = 1e-9;

struct Tableau {
  std::vector<std::vector<double>> rows;  // constraint rows, last entry = rhs
  std::vector<double> z;                  // reduced costs, last entry = -objective
  std::vector<int> basis;
  int cols = 0;

  void pivot(int r, int c) {
    auto& pr = rows[r];
    const double piv = pr[c];
    for (double& v : pr) v /= piv;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<int>(i) == r) continue;
      const double f = rows[i][c];
      if (f == 0.0) continue;
      for (int j = 0; j <= cols; ++j) rows[i][j] -= f * pr[j];
    }
    const double f = z[c];
    if (f != 0.0) {
      for (int j = 0; j <= cols; ++j) z[j] -= f * pr[j];
    }
    basis[r] = c;
  }

  void set_cost(const std::vector<double>& cost) {
    z.assign(cols + 1, 0.0);
    for (int j = 0; j < cols; ++j) z[j] = cost[j];
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double cb = cost[basis[i]];
      if (cb == 0.0) continue;
      for (int j = 0; j <= cols; ++j) z[j] -= cb * rows[i][j];
    }
  }

  // false when unbounded
  bool optimise(const std::vector<bool>& allowed) {
    while (true) {
      int enter = -1;
      for (int j = 0; j < cols; ++j) {
        if (allowed[j] && z[j] < -kEps) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const double a = rows[i][enter];
        if (a <= kEps) continue;
        const double ratio = rows[i][cols] / a;
        if (ratio < best - kEps || (std::abs(ratio - best) <= kEps && leave >= 0 &&
                                    basis[i] < basis[leave])) {
          best = ratio;
          leave = static_cast<int>(i);
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }
};

}  // namespace

LpResult solve_lp(const std::vector<double>& c, const std::vector<LinearConstraint>& constraints) {
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(constraints.size());
  int n_slack = 0;
  int n_art = 0;
  for (const auto& k : constraints) {
    Relation rel = k.rel;
    if (k.b < 0.0 && rel != Relation::Equal) rel = rel == Relation::LessEq ? Relation::GreaterEq : Relation::LessEq;
    if (rel != Relation::Equal) ++n_slack;
    if (rel != Relation::LessEq) ++n_art;
  }
  Tableau t;
  t.cols = n + n_slack + n_art;
  t.rows.assign(m, std::vector<double>(t.cols + 1, 0.0));
  t.basis.assign(m, -1);
  int slack = n;
  int art = n + n_slack;
  for (int i = 0; i < m; ++i) {
    const auto& k = constraints[i];
    const double sign = k.b < 0.0 ? -1.0 : 1.0;
    Relation rel = k.rel;
    if (sign < 0.0 && rel != Relation::Equal) rel = rel == Relation::LessEq ? Relation::GreaterEq : Relation::LessEq;
    for (int j = 0; j < n && j < static_cast<int>(k.a.size()); ++j) t.rows[i][j] = sign * k.a[j];
    t.rows[i][t.cols] = sign * k.b;
    if (rel == Relation::LessEq) {
      t.rows[i][slack] = 1.0;
      t.basis[i] = slack++;
    } else {
      if (rel == Relation::GreaterEq) t.rows[i][slack++] = -1.0;
      t.rows[i][art] = 1.0;
      t.basis[i] = art++;
    }
  }

  LpResult res;
  std::vector<bool> allowed(t.cols, true);
  if (n_art > 0) {
    std::vector<double> phase1(t.cols, 0.0);
    for (int j = n + n_slack; j < t.cols; ++j) phase1[j] = 1.0;
    t.set_cost(phase1);
    t.optimise(allowed);
    if (-t.z[t.cols] > 1e-7) {
      res.status = LpResult::Status::Infeasible;
      return res;
    }
    // Drive zero-valued artificials out of the basis.
    for (int i = 0; i < m; ++i) {
      if (t.basis[i] < n + n_slack) continue;
      for (int j = 0; j < n + n_slack; ++j) {
        if (std::abs(t.rows[i][j]) > kEps) {
          t.pivot(i, j);
          break;
        }
      }
    }
    for (int j = n + n_slack; j < t.cols; ++j) allowed[j] = false;
  }
  std::vector<double> cost(t.cols, 0.0);
  for (int j = 0; j < n; ++j) cost[j] = c[j];
  t.set_cost(cost);
  if (!t.optimise(allowed)) {
    res.status = LpResult::Status::Unbounded;
    return res;
  }
  res.x.assign(n, 0.0);
  for (int i = 0; i < m; ++i) {
    if (t.basis[i] < n) res.x[t.basis[i]] = std::max(0.0, t.rows[i][t.cols]);
  }
  res.objective = 0.0;
  for (int j = 0; j < n; ++j) res.objective += c[j] * res.x[j];
  return res;
}

}  // namespace coopmon
