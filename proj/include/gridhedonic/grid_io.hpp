#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "gridhedonic/grid.hpp"

namespace gridhedonic::grid {

// Wave file: a JSON array of objects
//   {wave_id, group_id, name, announce_date, sale_date, [land_offered],
//    region: {rects: [[x0,y0,x1,y1], ...]} | {coords: [[x,y], ...]}}
// Rectangle corners are inclusive.
std::vector<Wave> waves_from_json(const nlohmann::json& doc, int map_size = kDefaultMapSize);
nlohmann::json waves_to_json(std::span<const Wave> waves);

std::vector<Wave> load_waves(const std::filesystem::path& path, int map_size = kDefaultMapSize);
void save_waves(const std::filesystem::path& path, std::span<const Wave> waves);

}  // namespace gridhedonic::grid
