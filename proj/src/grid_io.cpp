#include "gridhedonic/grid_io.hpp"

#include "gridhedonic/errors.hpp"
#include "gridhedonic/io.hpp"

namespace gridhedonic::grid {

using nlohmann::json;

namespace {

Region region_from_json(const json& j, int map_size) {
  if (j.contains("rects")) {
    std::vector<Rect> rects;
    for (const auto& r : j.at("rects")) {
      if (!r.is_array() || r.size() != 4) throw InvalidInput("region rect must be [x0,y0,x1,y1]");
      rects.push_back({r[0].get<int>(), r[1].get<int>(), r[2].get<int>(), r[3].get<int>()});
    }
    return Region::from_rects(std::move(rects), map_size);
  }
  if (j.contains("coords")) {
    std::vector<Coord> coords;
    for (const auto& c : j.at("coords")) {
      if (!c.is_array() || c.size() != 2) throw InvalidInput("region coord must be [x,y]");
      coords.push_back({c[0].get<int>(), c[1].get<int>()});
    }
    return Region(std::move(coords), map_size);
  }
  throw InvalidInput("region needs either 'rects' or 'coords'");
}

}  // namespace

std::vector<Wave> waves_from_json(const json& doc, int map_size) {
  if (!doc.is_array()) throw InvalidInput("wave file must hold a JSON array");
  std::vector<Wave> waves;
  try {
    for (const auto& w : doc) {
      std::optional<std::size_t> offered;
      if (w.contains("land_offered")) offered = w.at("land_offered").get<std::size_t>();
      waves.push_back(Wave{w.at("wave_id").get<int>(), w.at("group_id").get<int>(),
                           w.value("name", std::string{}),
                           parse_date(w.at("announce_date").get<std::string>()),
                           parse_date(w.at("sale_date").get<std::string>()),
                           region_from_json(w.at("region"), map_size), offered});
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed wave file: ") + e.what());
  }
  return waves;
}

json waves_to_json(std::span<const Wave> waves) {
  json doc = json::array();
  for (const Wave& w : waves) {
    json region;
    if (!w.region.rects().empty()) {
      region["rects"] = json::array();
      for (const Rect& r : w.region.rects()) region["rects"].push_back({r.x0, r.y0, r.x1, r.y1});
    } else {
      region["coords"] = json::array();
      for (Coord c : w.region.parcels()) region["coords"].push_back({c.x, c.y});
    }
    json entry = {{"wave_id", w.wave_id},
                  {"group_id", w.group_id},
                  {"name", w.name},
                  {"announce_date", format_date(w.announce_date)},
                  {"sale_date", format_date(w.sale_date)},
                  {"land_offered", w.region.size()},
                  {"region", region}};
    doc.push_back(std::move(entry));
  }
  return doc;
}

std::vector<Wave> load_waves(const std::filesystem::path& path, int map_size) {
  const std::string text = io::read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput("cannot parse '" + path.string() + "': " + e.what());
  }
  return waves_from_json(doc, map_size);
}

void save_waves(const std::filesystem::path& path, std::span<const Wave> waves) {
  io::write_file_atomic(path, waves_to_json(waves).dump(1) + "\n");
}

}  // namespace gridhedonic::grid
