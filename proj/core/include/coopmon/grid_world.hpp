#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "coopmon/geometry.hpp"

namespace coopmon {

enum class Cell : std::uint8_t { Free = 0, Wall = 1 };

struct CellIndex {
  int i = 0;  // column (x)
  int j = 0;  // row (y)
  bool operator==(const CellIndex&) const = default;
};

struct Room {
  int id = 0;
  Rect rect;
  Vec2 centroid() const { return rect.centroid(); }
  bool operator==(const Room&) const = default;
};

struct Zone {
  int id = 0;
  std::vector<int> room_ids;  // ascending
  bool operator==(const Zone&) const = default;
};

/// Occupancy grid of an indoor layout with room and zone labels. Row 0 is the
/// bottom of the map (y = 0); cell (i, j) spans [i*cs, (i+1)*cs) x [j*cs, (j+1)*cs).
class GridWorld {
 public:
  GridWorld() = default;
  GridWorld(double cell_size_m, int width_cells, int height_cells);

  double cell_size() const { return cell_size_; }
  int width_cells() const { return width_cells_; }
  int height_cells() const { return height_cells_; }
  double width_m() const { return width_cells_ * cell_size_; }
  double height_m() const { return height_cells_ * cell_size_; }
  Vec2 center() const { return {width_m() / 2.0, height_m() / 2.0}; }

  bool in_grid(int i, int j) const {
    return i >= 0 && j >= 0 && i < width_cells_ && j < height_cells_;
  }
  bool in_bounds(Vec2 p) const {
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= width_m() && p.y <= height_m();
  }
  std::size_t flat(int i, int j) const {
    return static_cast<std::size_t>(j) * width_cells_ + i;
  }
  std::size_t flat(CellIndex c) const { return flat(c.i, c.j); }
  CellIndex unflat(std::size_t k) const {
    return {static_cast<int>(k % width_cells_), static_cast<int>(k / width_cells_)};
  }

  Cell at(int i, int j) const { return cells_[flat(i, j)]; }
  void set(int i, int j, Cell c) { cells_[flat(i, j)] = c; }
  /// Out-of-grid cells count as walls.
  bool is_free(int i, int j) const { return in_grid(i, j) && at(i, j) == Cell::Free; }
  bool is_free(CellIndex c) const { return is_free(c.i, c.j); }
  /// True when p lies in a free cell (points on the outer boundary are walls).
  bool is_free_point(Vec2 p) const;

  /// Cell containing p; points on the far map edge clamp into the last cell.
  CellIndex cell_of(Vec2 p) const;
  Vec2 cell_center(CellIndex c) const {
    return {(c.i + 0.5) * cell_size_, (c.j + 0.5) * cell_size_};
  }

  const std::vector<Cell>& cells() const { return cells_; }
  std::size_t free_cell_count() const;

  const std::vector<Room>& rooms() const { return rooms_; }
  const std::vector<Zone>& zones() const { return zones_; }
  int zone_count() const { return static_cast<int>(zones_.size()); }
  /// Zone id of every room, indexed by room id.
  const std::vector<int>& room_zone() const { return room_zone_; }

  void set_rooms(std::vector<Room> rooms, std::vector<Zone> zones);

  /// Zone of the lowest-id room containing p, or nullopt for corridors/walls.
  /// Throws OutOfBounds when p is outside the map.
  std::optional<int> zone_of(Vec2 p) const;
  /// Lowest-id room containing p.
  std::optional<int> room_of(Vec2 p) const;

  bool operator==(const GridWorld&) const = default;

 private:
  double cell_size_ = 0.5;
  int width_cells_ = 0;
  int height_cells_ = 0;
  std::vector<Cell> cells_;
  std::vector<Room> rooms_;
  std::vector<Zone> zones_;
  std::vector<int> room_zone_;
};

struct MapParams {
  double width_m = 80.0;
  double height_m = 40.0;
  int n_rooms = 12;
  double room_size_min_m = 6.0;
  double room_size_max_m = 16.0;
  double corridor_width_m = 2.0;
  double cell_size_m = 0.5;
  int max_placements = 200;
};

/// Seed whose default-parameter layout has 7 zones, used as the shared
/// reference map for experiments.
inline constexpr std::uint64_t kReferenceMapSeed = 40;

GridWorld generate_map(std::uint64_t seed, const MapParams& params = {});
GridWorld reference_map();

/// Connected components of the rectangle-overlap graph; zone ids follow the
/// ascending minimum room id of each component.
std::vector<Zone> label_zones(const std::vector<Room>& rooms);

/// Number of 4-connected components of free cells.
int free_components(const GridWorld& world);

/// Checks every layout invariant; throws FormatError naming the first violation.
void validate_world(const GridWorld& world);

std::string run_length_encode(const std::vector<Cell>& cells);
std::vector<Cell> run_length_decode(const std::string& text);

std::string map_to_string(const GridWorld& world);
GridWorld map_from_string(const std::string& text);
void save_map(const GridWorld& world, const std::filesystem::path& path);
GridWorld load_map(const std::filesystem::path& path);

}  // namespace coopmon
