#include "coopmon/grid_world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>

#include <nlohmann/json.hpp>

#include "coopmon/errors.hpp"
#include "coopmon/rng.hpp"

namespace coopmon {

using json = nlohmann::json;

GridWorld::GridWorld(double cell_size_m, int width_cells, int height_cells)
    : cell_size_(cell_size_m),
      width_cells_(width_cells),
      height_cells_(height_cells),
      cells_(static_cast<std::size_t>(width_cells) * height_cells, Cell::Wall) {}

CellIndex GridWorld::cell_of(Vec2 p) const {
  int i = static_cast<int>(std::floor(p.x / cell_size_));
  int j = static_cast<int>(std::floor(p.y / cell_size_));
  i = std::clamp(i, 0, width_cells_ - 1);
  j = std::clamp(j, 0, height_cells_ - 1);
  return {i, j};
}

bool GridWorld::is_free_point(Vec2 p) const {
  if (!in_bounds(p)) return false;
  return is_free(cell_of(p));
}

std::size_t GridWorld::free_cell_count() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), Cell::Free));
}

void GridWorld::set_rooms(std::vector<Room> rooms, std::vector<Zone> zones) {
  rooms_ = std::move(rooms);
  zones_ = std::move(zones);
  room_zone_.assign(rooms_.size(), -1);
  for (const Zone& z : zones_) {
    for (int r : z.room_ids) {
      if (r >= 0 && r < static_cast<int>(room_zone_.size())) room_zone_[r] = z.id;
    }
  }
}

std::optional<int> GridWorld::room_of(Vec2 p) const {
  if (!in_bounds(p)) {
    std::ostringstream os;
    os << "point (" << p.x << ", " << p.y << ") outside " << width_m() << "x" << height_m()
       << " m map";
    throw OutOfBounds(os.str());
  }
  for (const Room& r : rooms_) {
    if (r.rect.contains(p)) return r.id;
  }
  return std::nullopt;
}

std::optional<int> GridWorld::zone_of(Vec2 p) const {
  auto room = room_of(p);
  if (!room) return std::nullopt;
  return room_zone_[*room];
}

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // Smaller index becomes the root so roots are component minima.
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

void carve_rect_cells(GridWorld& world, int i0, int j0, int i1, int j1) {
  i0 = std::max(i0, 1);
  j0 = std::max(j0, 1);
  i1 = std::min(i1, world.width_cells() - 2);
  j1 = std::min(j1, world.height_cells() - 2);
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) world.set(i, j, Cell::Free);
  }
}

// Cell index span [first, first + n) of a band of n cells centred on coordinate c.
int band_start(double c, double cs, int n) {
  return static_cast<int>(std::floor(c / cs - n / 2.0 + 0.5));
}

void carve_corridor(GridWorld& world, Vec2 from, Vec2 to, double corridor_width) {
  const double cs = world.cell_size();
  const int n = std::max(1, static_cast<int>(std::lround(corridor_width / cs)));
  // Horizontal leg along y = from.y, then vertical leg along x = to.x.
  const int hj = band_start(from.y, cs, n);
  const int vi = band_start(to.x, cs, n);
  const int x_lo = std::min(static_cast<int>(std::floor(std::min(from.x, to.x) / cs)), vi);
  const int x_hi = std::max(static_cast<int>(std::floor(std::max(from.x, to.x) / cs)), vi + n - 1);
  carve_rect_cells(world, x_lo, hj, x_hi, hj + n - 1);
  const int y_lo = std::min(static_cast<int>(std::floor(std::min(from.y, to.y) / cs)), hj);
  const int y_hi = std::max(static_cast<int>(std::floor(std::max(from.y, to.y) / cs)), hj + n - 1);
  carve_rect_cells(world, vi, y_lo, vi + n - 1, y_hi);
}

bool contains_rect(const Rect& outer, const Rect& inner) {
  return inner.x0 >= outer.x0 && inner.x1 <= outer.x1 && inner.y0 >= outer.y0 &&
         inner.y1 <= outer.y1;
}

void check_params(const MapParams& p) {
  auto fail = [](const std::string& m) { throw GenerationFailed(m); };
  if (!(p.width_m > 0.0) || !(p.height_m > 0.0)) fail("map dimensions must be positive");
  if (!(p.cell_size_m > 0.0)) fail("cell size must be positive");
  if (p.n_rooms < 1) fail("at least one room is required");
  const double wc = p.width_m / p.cell_size_m;
  const double hc = p.height_m / p.cell_size_m;
  if (std::abs(wc - std::round(wc)) > 1e-9 || std::abs(hc - std::round(hc)) > 1e-9) {
    fail("map dimensions must be integer multiples of the cell size");
  }
  if (p.room_size_min_m <= 0.0 || p.room_size_max_m < p.room_size_min_m) {
    fail("invalid room size range");
  }
  const double inner_w = p.width_m - 2.0 * p.cell_size_m;
  const double inner_h = p.height_m - 2.0 * p.cell_size_m;
  if (p.room_size_max_m > std::min(inner_w, inner_h)) {
    fail("room size range exceeds the map interior");
  }
}

}  // namespace

std::vector<Zone> label_zones(const std::vector<Room>& rooms) {
  UnionFind uf(rooms.size());
  for (std::size_t a = 0; a < rooms.size(); ++a) {
    for (std::size_t b = a + 1; b < rooms.size(); ++b) {
      if (overlaps(rooms[a].rect, rooms[b].rect)) uf.unite(a, b);
    }
  }
  // Roots are component minima, so scanning rooms in id order yields zones
  // ordered by ascending minimum room id.
  std::vector<int> zone_of_root(rooms.size(), -1);
  std::vector<Zone> zones;
  for (std::size_t r = 0; r < rooms.size(); ++r) {
    const std::size_t root = uf.find(r);
    if (zone_of_root[root] < 0) {
      zone_of_root[root] = static_cast<int>(zones.size());
      zones.push_back({static_cast<int>(zones.size()), {}});
    }
    zones[zone_of_root[root]].room_ids.push_back(rooms[r].id);
  }
  return zones;
}

int free_components(const GridWorld& world) {
  std::vector<std::uint8_t> seen(world.cells().size(), 0);
  int components = 0;
  std::queue<CellIndex> frontier;
  for (int j = 0; j < world.height_cells(); ++j) {
    for (int i = 0; i < world.width_cells(); ++i) {
      if (!world.is_free(i, j) || seen[world.flat(i, j)]) continue;
      ++components;
      seen[world.flat(i, j)] = 1;
      frontier.push({i, j});
      while (!frontier.empty()) {
        const CellIndex c = frontier.front();
        frontier.pop();
        constexpr int di[] = {1, -1, 0, 0};
        constexpr int dj[] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int ni = c.i + di[k];
          const int nj = c.j + dj[k];
          if (world.is_free(ni, nj) && !seen[world.flat(ni, nj)]) {
            seen[world.flat(ni, nj)] = 1;
            frontier.push({ni, nj});
          }
        }
      }
    }
  }
  return components;
}

GridWorld generate_map(std::uint64_t seed, const MapParams& params) {
  check_params(params);
  const double cs = params.cell_size_m;
  const int wc = static_cast<int>(std::lround(params.width_m / cs));
  const int hc = static_cast<int>(std::lround(params.height_m / cs));
  GridWorld world(cs, wc, hc);
  Rng rng = make_rng(seed, Stream::Map);

  const int min_side = std::max(1, static_cast<int>(std::lround(params.room_size_min_m / cs)));
  const int max_side = std::max(min_side, static_cast<int>(std::lround(params.room_size_max_m / cs)));

  std::vector<Room> rooms;
  int attempts = 0;
  while (static_cast<int>(rooms.size()) < params.n_rooms) {
    if (attempts++ >= params.max_placements) {
      throw GenerationFailed("placed " + std::to_string(rooms.size()) + " of " +
                             std::to_string(params.n_rooms) + " rooms within " +
                             std::to_string(params.max_placements) + " attempts");
    }
    const int w = std::uniform_int_distribution<int>(min_side, max_side)(rng);
    const int h = std::uniform_int_distribution<int>(min_side, max_side)(rng);
    // Interior cells are 1 .. wc-2; the rectangle occupies cells [i0, i0 + w).
    if (w > wc - 2 || h > hc - 2) continue;
    const int i0 = std::uniform_int_distribution<int>(1, wc - 1 - w)(rng);
    const int j0 = std::uniform_int_distribution<int>(1, hc - 1 - h)(rng);
    const Rect rect{i0 * cs, j0 * cs, (i0 + w) * cs, (j0 + h) * cs};
    const bool nested = std::any_of(rooms.begin(), rooms.end(), [&](const Room& r) {
      return contains_rect(r.rect, rect) || contains_rect(rect, r.rect);
    });
    if (nested) continue;

    carve_rect_cells(world, i0, j0, i0 + w - 1, j0 + h - 1);
    const Room room{static_cast<int>(rooms.size()), rect};
    if (!rooms.empty()) {
      const Vec2 c = room.centroid();
      const Room* nearest = &rooms.front();
      for (const Room& r : rooms) {
        if (distance(r.centroid(), c) < distance(nearest->centroid(), c)) nearest = &r;
      }
      carve_corridor(world, c, nearest->centroid(), params.corridor_width_m);
    }
    rooms.push_back(room);
  }

  auto zones = label_zones(rooms);
  world.set_rooms(std::move(rooms), std::move(zones));
  if (free_components(world) != 1) {
    throw GenerationFailed("free space is not connected");
  }
  return world;
}

GridWorld reference_map() { return generate_map(kReferenceMapSeed, MapParams{}); }

void validate_world(const GridWorld& world) {
  auto fail = [](const std::string& m) { throw FormatError(m); };
  if (!(world.cell_size() > 0.0)) fail("cell size must be positive");
  if (world.width_cells() < 3 || world.height_cells() < 3) fail("grid too small");
  for (int i = 0; i < world.width_cells(); ++i) {
    if (world.is_free(i, 0) || world.is_free(i, world.height_cells() - 1)) {
      fail("border ring must be wall");
    }
  }
  for (int j = 0; j < world.height_cells(); ++j) {
    if (world.is_free(0, j) || world.is_free(world.width_cells() - 1, j)) {
      fail("border ring must be wall");
    }
  }
  if (free_components(world) != 1) fail("free space must form exactly one connected component");

  const double cs = world.cell_size();
  const auto& rooms = world.rooms();
  if (rooms.empty()) fail("at least one room is required");
  for (std::size_t r = 0; r < rooms.size(); ++r) {
    const Room& room = rooms[r];
    if (room.id != static_cast<int>(r)) fail("room ids must be 0..n-1 in order");
    const Rect& rc = room.rect;
    if (!(rc.x0 >= cs && rc.y0 >= cs && rc.x1 <= world.width_m() - cs &&
          rc.y1 <= world.height_m() - cs && rc.x1 > rc.x0 && rc.y1 > rc.y0)) {
      fail("room " + std::to_string(r) + " is not strictly inside the border");
    }
    for (int j = 0; j < world.height_cells(); ++j) {
      for (int i = 0; i < world.width_cells(); ++i) {
        const Vec2 c = world.cell_center({i, j});
        if (rc.contains(c) && !world.is_free(i, j)) {
          fail("room " + std::to_string(r) + " has a wall cell in its interior");
        }
      }
    }
  }

  std::vector<int> owner(rooms.size(), -1);
  const auto& zones = world.zones();
  for (std::size_t z = 0; z < zones.size(); ++z) {
    if (zones[z].id != static_cast<int>(z)) fail("zone ids must be 0..Z-1 in order");
    if (zones[z].room_ids.empty()) fail("zone " + std::to_string(z) + " is empty");
    for (int r : zones[z].room_ids) {
      if (r < 0 || r >= static_cast<int>(rooms.size())) {
        fail("zone " + std::to_string(z) + " references unknown room " + std::to_string(r));
      }
      if (owner[r] >= 0) fail("room " + std::to_string(r) + " assigned to two zones");
      owner[r] = static_cast<int>(z);
    }
  }
  for (std::size_t r = 0; r < rooms.size(); ++r) {
    if (owner[r] < 0) fail("room " + std::to_string(r) + " belongs to no zone");
  }
  for (std::size_t a = 0; a < rooms.size(); ++a) {
    for (std::size_t b = a + 1; b < rooms.size(); ++b) {
      if (overlaps(rooms[a].rect, rooms[b].rect) && owner[a] != owner[b]) {
        fail("overlapping rooms " + std::to_string(a) + " and " + std::to_string(b) +
             " are in different zones");
      }
    }
  }
  // Rooms within a zone must form a connected overlap graph.
  for (const Zone& z : zones) {
    std::vector<Room> members;
    for (int r : z.room_ids) members.push_back(rooms[r]);
    for (std::size_t k = 0; k < members.size(); ++k) members[k].id = static_cast<int>(k);
    if (label_zones(members).size() != 1) {
      fail("rooms of zone " + std::to_string(z.id) + " do not form a connected overlap graph");
    }
  }
}

std::string run_length_encode(const std::vector<Cell>& cells) {
  std::string out;
  std::size_t k = 0;
  while (k < cells.size()) {
    std::size_t run = 1;
    while (k + run < cells.size() && cells[k + run] == cells[k]) ++run;
    out += std::to_string(run);
    out += cells[k] == Cell::Free ? 'F' : 'W';
    k += run;
  }
  return out;
}

std::vector<Cell> run_length_decode(const std::string& text) {
  std::vector<Cell> cells;
  std::size_t count = 0;
  bool have_digits = false;
  for (char ch : text) {
    if (ch >= '0' && ch <= '9') {
      count = count * 10 + static_cast<std::size_t>(ch - '0');
      have_digits = true;
      if (count > (1u << 28)) throw FormatError("run length too large");
    } else if (ch == 'F' || ch == 'W') {
      if (!have_digits || count == 0) throw FormatError("run without a positive count");
      cells.insert(cells.end(), count, ch == 'F' ? Cell::Free : Cell::Wall);
      count = 0;
      have_digits = false;
    } else {
      throw FormatError(std::string("unexpected character '") + ch + "' in cell runs");
    }
  }
  if (have_digits) throw FormatError("trailing count without a cell symbol");
  return cells;
}

std::string map_to_string(const GridWorld& world) {
  json j;
  j["format"] = "coopmon-map";
  j["version"] = 1;
  j["cell_size_m"] = world.cell_size();
  j["width_cells"] = world.width_cells();
  j["height_cells"] = world.height_cells();
  j["cells"] = run_length_encode(world.cells());
  json rooms = json::array();
  for (const Room& r : world.rooms()) {
    rooms.push_back({{"id", r.id},
                     {"x0", r.rect.x0},
                     {"y0", r.rect.y0},
                     {"x1", r.rect.x1},
                     {"y1", r.rect.y1}});
  }
  j["rooms"] = rooms;
  json zones = json::array();
  for (const Zone& z : world.zones()) zones.push_back({{"id", z.id}, {"room_ids", z.room_ids}});
  j["zones"] = zones;
  return j.dump(1) + "\n";
}

GridWorld map_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("map file is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", std::string{}) != "coopmon-map") throw FormatError("not a coopmon map");
    if (j.at("version").get<int>() != 1) throw FormatError("unsupported map version");
    const double cs = j.at("cell_size_m").get<double>();
    const int wc = j.at("width_cells").get<int>();
    const int hc = j.at("height_cells").get<int>();
    if (!(cs > 0.0) || wc <= 0 || hc <= 0) throw FormatError("invalid grid dimensions");
    auto cells = run_length_decode(j.at("cells").get<std::string>());
    if (cells.size() != static_cast<std::size_t>(wc) * hc) {
      throw FormatError("cell runs cover " + std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(static_cast<std::size_t>(wc) * hc));
    }
    GridWorld world(cs, wc, hc);
    for (int jj = 0; jj < hc; ++jj) {
      for (int ii = 0; ii < wc; ++ii) world.set(ii, jj, cells[world.flat(ii, jj)]);
    }
    std::vector<Room> rooms;
    for (const auto& r : j.at("rooms")) {
      rooms.push_back({r.at("id").get<int>(),
                       Rect{r.at("x0").get<double>(), r.at("y0").get<double>(),
                            r.at("x1").get<double>(), r.at("y1").get<double>()}});
    }
    std::vector<Zone> zones;
    for (const auto& z : j.at("zones")) {
      zones.push_back({z.at("id").get<int>(), z.at("room_ids").get<std::vector<int>>()});
    }
    world.set_rooms(std::move(rooms), std::move(zones));
    validate_world(world);
    return world;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed map file: ") + e.what());
  }
}

void save_map(const GridWorld& world, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << map_to_string(world);
  if (!out) throw IoError("failed writing " + path.string());
}

GridWorld load_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return map_from_string(buf.str());
}

}  // namespace coopmon
