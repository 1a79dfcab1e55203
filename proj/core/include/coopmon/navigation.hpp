#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coopmon/grid_world.hpp"

namespace coopmon {

/// Per-cell passability flags, indexed like GridWorld::flat.
using CellMask = std::vector<std::uint8_t>;

/// Free cells whose whole square keeps at least buffer_m from every wall cell.
/// buffer_m = 0 yields the plain free-cell mask.
CellMask buffered_mask(const GridWorld& world, double buffer_m);

struct GridPath {
  std::vector<CellIndex> cells;
  std::vector<Vec2> points;  // cell centres
  double cost_m = 0.0;
};

/// 8-connected A* with the octile heuristic. Diagonal steps require both
/// orthogonal neighbours to be passable, so paths never cut wall corners.
/// Throws NoPath when the endpoints are not connected through the mask.
GridPath astar_cells(const GridWorld& world, const CellMask& passable, CellIndex start,
                     CellIndex goal);

/// Point-level wrapper: plans between the cells containing a and b over the
/// cells that keep buffer_m clearance from walls.
GridPath astar_path(const GridWorld& world, Vec2 a, Vec2 b, double buffer_m);

/// True when every cell touched by the segment a-b is flagged in the mask.
/// Uses an exact grid traversal, so corner grazes count as touching.
bool segment_in_mask(const GridWorld& world, const CellMask& mask, Vec2 a, Vec2 b);

/// Cells crossed by segment a-b in traversal order (exact supercover walk).
std::vector<CellIndex> traverse_segment(const GridWorld& world, Vec2 a, Vec2 b);

/// Total length of a polyline.
double polyline_length(std::span<const Vec2> pts);

/// Closest point on a polyline: segment index and the arc length at that point.
struct PolylineProjection {
  std::size_t segment = 0;
  double arc = 0.0;
  Vec2 point;
  double distance = 0.0;
};
PolylineProjection project_onto_polyline(std::span<const Vec2> pts, Vec2 p);

/// Point at the given arc length, clamped to the polyline ends.
Vec2 point_at_arc(std::span<const Vec2> pts, double arc);

}  // namespace coopmon
