#include "coopmon/navigation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "coopmon/errors.hpp"

namespace coopmon {

CellMask buffered_mask(const GridWorld& world, double buffer_m) {
  const int w = world.width_cells();
  const int h = world.height_cells();
  const double cs = world.cell_size();
  CellMask mask(world.cells().size(), 0);
  const int reach = static_cast<int>(std::ceil(buffer_m / cs)) + 1;
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      if (!world.is_free(i, j)) continue;
      bool ok = true;
      for (int dj = -reach; dj <= reach && ok; ++dj) {
        for (int di = -reach; di <= reach && ok; ++di) {
          if (world.is_free(i + di, j + dj)) continue;
          // Gap between the two cell squares.
          const double gx = std::max(std::abs(di) - 1, 0) * cs;
          const double gy = std::max(std::abs(dj) - 1, 0) * cs;
          if (std::hypot(gx, gy) < buffer_m) ok = false;
        }
      }
      mask[world.flat(i, j)] = ok ? 1 : 0;
    }
  }
  return mask;
}

GridPath astar_cells(const GridWorld& world, const CellMask& passable, CellIndex start,
                     CellIndex goal) {
  auto open_cell = [&](int i, int j) {
    return world.in_grid(i, j) && passable[world.flat(i, j)] != 0;
  };
  if (!open_cell(start.i, start.j) || !open_cell(goal.i, goal.j)) {
    throw NoPath("endpoint outside passable space");
  }
  const double cs = world.cell_size();
  const double diag = std::sqrt(2.0) * cs;
  GridPath result;
  if (start == goal) {
    result.cells = {start};
    result.points = {world.cell_center(start)};
    return result;
  }
  auto heuristic = [&](int i, int j) {
    const int dx = std::abs(i - goal.i);
    const int dy = std::abs(j - goal.j);
    return cs * std::max(dx, dy) + (diag - cs) * std::min(dx, dy);
  };

  const std::size_t n = world.cells().size();
  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> parent(n, -1);
  std::vector<std::uint8_t> closed(n, 0);
  struct Node {
    double f;
    double h;
    std::size_t idx;
    bool operator>(const Node& o) const {
      if (f != o.f) return f > o.f;
      if (h != o.h) return h > o.h;
      return idx > o.idx;
    }
  };
  std::priority_queue<Node, std::vector<Node>, std::greater<>> open;
  const std::size_t s = world.flat(start);
  const std::size_t t = world.flat(goal);
  g[s] = 0.0;
  open.push({heuristic(start.i, start.j), heuristic(start.i, start.j), s});

  constexpr int di[] = {1, -1, 0, 0, 1, 1, -1, -1};
  constexpr int dj[] = {0, 0, 1, -1, 1, -1, 1, -1};
  while (!open.empty()) {
    const Node cur = open.top();
    open.pop();
    if (closed[cur.idx]) continue;
    closed[cur.idx] = 1;
    if (cur.idx == t) break;
    const CellIndex c = world.unflat(cur.idx);
    for (int k = 0; k < 8; ++k) {
      const int ni = c.i + di[k];
      const int nj = c.j + dj[k];
      if (!open_cell(ni, nj)) continue;
      const bool diagonal = k >= 4;
      if (diagonal && (!open_cell(c.i + di[k], c.j) || !open_cell(c.i, c.j + dj[k]))) continue;
      const std::size_t nidx = world.flat(ni, nj);
      if (closed[nidx]) continue;
      const double ng = g[cur.idx] + (diagonal ? diag : cs);
      if (ng < g[nidx]) {
        g[nidx] = ng;
        parent[nidx] = static_cast<std::int64_t>(cur.idx);
        const double hh = heuristic(ni, nj);
        open.push({ng + hh, hh, nidx});
      }
    }
  }
  if (!closed[t]) throw NoPath("goal not reachable through passable cells");

  for (std::int64_t k = static_cast<std::int64_t>(t); k >= 0; k = parent[k]) {
    result.cells.push_back(world.unflat(static_cast<std::size_t>(k)));
  }
  std::reverse(result.cells.begin(), result.cells.end());
  result.points.reserve(result.cells.size());
  for (CellIndex c : result.cells) result.points.push_back(world.cell_center(c));
  result.cost_m = g[t];
  return result;
}

GridPath astar_path(const GridWorld& world, Vec2 a, Vec2 b, double buffer_m) {
  const CellMask mask = buffered_mask(world, buffer_m);
  return astar_cells(world, mask, world.cell_of(a), world.cell_of(b));
}

std::vector<CellIndex> traverse_segment(const GridWorld& world, Vec2 a, Vec2 b) {
  const double cs = world.cell_size();
  std::vector<CellIndex> out;
  CellIndex c = world.cell_of(a);
  const CellIndex end = world.cell_of(b);
  out.push_back(c);
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const int step_i = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int step_j = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  constexpr double inf = std::numeric_limits<double>::infinity();
  // Parametric distance (t in [0, 1]) to the next vertical / horizontal grid line.
  double t_max_x = inf;
  double t_max_y = inf;
  double t_delta_x = inf;
  double t_delta_y = inf;
  if (step_i != 0) {
    const double next_x = (c.i + (step_i > 0 ? 1 : 0)) * cs;
    t_max_x = (next_x - a.x) / dx;
    t_delta_x = cs / std::abs(dx);
  }
  if (step_j != 0) {
    const double next_y = (c.j + (step_j > 0 ? 1 : 0)) * cs;
    t_max_y = (next_y - a.y) / dy;
    t_delta_y = cs / std::abs(dy);
  }
  const std::size_t guard = static_cast<std::size_t>(world.width_cells() + world.height_cells()) * 2 + 4;
  while (!(c == end) && out.size() < guard) {
    if (t_max_x > 1.0 && t_max_y > 1.0) break;
    if (t_max_x < t_max_y) {
      c.i += step_i;
      t_max_x += t_delta_x;
    } else if (t_max_y < t_max_x) {
      c.j += step_j;
      t_max_y += t_delta_y;
    } else {
      // Exact corner crossing: include both side cells.
      out.push_back({c.i + step_i, c.j});
      out.push_back({c.i, c.j + step_j});
      c.i += step_i;
      c.j += step_j;
      t_max_x += t_delta_x;
      t_max_y += t_delta_y;
    }
    if (!world.in_grid(c.i, c.j)) break;
    out.push_back(c);
  }
  return out;
}

bool segment_in_mask(const GridWorld& world, const CellMask& mask, Vec2 a, Vec2 b) {
  for (CellIndex c : traverse_segment(world, a, b)) {
    if (!world.in_grid(c.i, c.j) || mask[world.flat(c)] == 0) return false;
  }
  return true;
}

double polyline_length(std::span<const Vec2> pts) {
  double len = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) len += distance(pts[k - 1], pts[k]);
  return len;
}

PolylineProjection project_onto_polyline(std::span<const Vec2> pts, Vec2 p) {
  PolylineProjection best;
  if (pts.empty()) return best;
  best.point = pts.front();
  best.distance = distance(p, pts.front());
  double arc = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const Vec2 a = pts[k - 1];
    const Vec2 ab = pts[k] - a;
    const double len = norm(ab);
    double t = 0.0;
    if (len > 0.0) t = std::clamp(dot(p - a, ab) / (len * len), 0.0, 1.0);
    const Vec2 q = a + ab * t;
    const double d = distance(p, q);
    if (d < best.distance) {
      best = {k - 1, arc + t * len, q, d};
    }
    arc += len;
  }
  return best;
}

Vec2 point_at_arc(std::span<const Vec2> pts, double arc) {
  if (pts.empty()) return {};
  if (arc <= 0.0) return pts.front();
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const double len = distance(pts[k - 1], pts[k]);
    if (arc <= len) {
      if (len == 0.0) return pts[k];
      return pts[k - 1] + (pts[k] - pts[k - 1]) * (arc / len);
    }
    arc -= len;
  }
  return pts.back();
}

}  // namespace coopmon
