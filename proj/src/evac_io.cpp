#include <fstream>
#include <sstream>

#include "spear/errors.hpp"
#include "spear/evac.hpp"

namespace spear::evac {

namespace {

constexpr const char* kMagic = "spear-map 1";

std::string cells_to_string(const std::vector<Coord>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(cells[i].x) + "," + std::to_string(cells[i].y);
  }
  return out;
}

int parse_int(const std::string& text, int line, const std::string& field) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, field, "expected an integer, got '" + text + "'");
  }
}

Coord parse_coord(const std::string& text, int line, const std::string& field) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ParseError(line, field, "expected x,y, got '" + text + "'");
  return {parse_int(text.substr(0, comma), line, field), parse_int(text.substr(comma + 1), line, field)};
}

}  // namespace

void save_map(const EvacMap& map, std::ostream& out) {
  out << kMagic << '\n';
  out << "width " << map.width() << '\n';
  out << "height " << map.height() << '\n';
  out << "seed " << map.seed() << '\n';
  out << "exits " << map.exits().size() << '\n';
  if (map.start()) out << "start " << map.start()->x << ',' << map.start()->y << '\n';
  for (const Region& r : map.rooms()) out << "room " << r.name << " = " << cells_to_string(r.cells) << '\n';
  for (const Region& r : map.hallways()) out << "hallway " << r.name << " = " << cells_to_string(r.cells) << '\n';
  out << "grid\n";
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) out << static_cast<char>(map.at({x, y}));
    out << '\n';
  }
}

void save_map(const EvacMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  save_map(map, out);
}

EvacMap load_map(std::istream& in) {
  std::string text;
  int line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, text)) return false;
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    return true;
  };

  if (!next_line() || text != kMagic) throw ParseError(1, "header", "expected '" + std::string(kMagic) + "'");

  int width = -1, height = -1, exits = -1;
  std::uint64_t seed = 0;
  std::optional<Coord> start;
  struct PendingRegion {
    bool room;
    Region region;
    int line;
  };
  std::vector<PendingRegion> regions;

  bool have_grid = false;
  while (next_line()) {
    if (text.empty() || text[0] == ';') continue;
    if (text == "grid") {
      have_grid = true;
      break;
    }
    const auto sp = text.find(' ');
    const std::string key = text.substr(0, sp);
    const std::string rest = sp == std::string::npos ? "" : text.substr(sp + 1);
    if (key == "width") {
      width = parse_int(rest, line_no, key);
    } else if (key == "height") {
      height = parse_int(rest, line_no, key);
    } else if (key == "exits") {
      exits = parse_int(rest, line_no, key);
    } else if (key == "seed") {
      try {
        seed = std::stoull(rest);
      } catch (const std::exception&) {
        throw ParseError(line_no, key, "expected an unsigned integer");
      }
    } else if (key == "start") {
      start = parse_coord(rest, line_no, key);
    } else if (key == "room" || key == "hallway") {
      const auto eq = rest.find(" = ");
      if (eq == std::string::npos || eq == 0) throw ParseError(line_no, key, "expected '<name> = x,y ...'");
      Region r{rest.substr(0, eq), {}};
      std::istringstream cells(rest.substr(eq + 3));
      std::string tok;
      while (cells >> tok) r.cells.push_back(parse_coord(tok, line_no, key));
      if (r.cells.empty()) throw ParseError(line_no, key, "region '" + r.name + "' has no cells");
      regions.push_back({key == "room", std::move(r), line_no});
    } else {
      throw ParseError(line_no, key, "unknown header field");
    }
  }
  if (width < 1) throw ParseError(line_no, "width", "missing or non-positive width");
  if (height < 1) throw ParseError(line_no, "height", "missing or non-positive height");
  if (exits < 0) throw ParseError(line_no, "exits", "missing exit count");
  if (exits < 1) throw ParseError(line_no, "exits", "a map needs at least one exit");
  if (!have_grid) throw ParseError(line_no, "grid", "missing grid section");

  EvacMap map(width, height, CellType::wall);
  for (int y = 0; y < height; ++y) {
    if (!next_line()) throw ParseError(line_no + 1, "grid", "expected " + std::to_string(height) + " grid rows");
    if (static_cast<int>(text.size()) != width)
      throw ParseError(line_no, "grid", "row has " + std::to_string(text.size()) + " cells, expected " +
                                            std::to_string(width));
    for (int x = 0; x < width; ++x) {
      const char c = text[static_cast<std::size_t>(x)];
      if (c != '#' && c != '.' && c != 'E' && c != 'F')
        throw ParseError(line_no, "grid", std::string("unknown cell '") + c + "'");
      map.set({x, y}, static_cast<CellType>(c));
    }
  }
  while (next_line())
    if (!text.empty()) throw ParseError(line_no, "grid", "trailing content after grid");

  if (static_cast<int>(map.exits().size()) != exits)
    throw ParseError(line_no, "exits", "header declares " + std::to_string(exits) + " exits but grid has " +
                                           std::to_string(map.exits().size()));
  for (auto& pr : regions) {
    for (Coord c : pr.region.cells)
      if (!map.in_bounds(c) || map.at(c) == CellType::wall)
        throw ParseError(pr.line, pr.room ? "room" : "hallway",
                         "cell " + std::to_string(c.x) + "," + std::to_string(c.y) + " is not a walkable cell");
    (pr.room ? map.rooms() : map.hallways()).push_back(std::move(pr.region));
  }
  if (start) {
    if (!map.in_bounds(*start) || map.at(*start) == CellType::wall)
      throw ParseError(line_no, "start", "start cell is not walkable");
  }
  map.set_seed(seed);
  map.set_start(start);
  return map;
}

EvacMap load_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return load_map(in);
}

}  // namespace spear::evac
