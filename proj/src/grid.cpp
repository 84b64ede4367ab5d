#include "gridhedonic/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <tuple>

#include "gridhedonic/errors.hpp"
#include "gridhedonic/stats.hpp"

namespace gridhedonic::grid {
namespace {

std::int64_t squared_distance(Coord a, Coord b) {
  const std::int64_t dx = a.x - b.x;
  const std::int64_t dy = a.y - b.y;
  return dx * dx + dy * dy;
}

std::string to_string(Coord c) {
  return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")";
}

}  // namespace

bool in_map(Coord c, int map_size) {
  return c.x >= 0 && c.y >= 0 && c.x < map_size && c.y < map_size;
}

Region::Region(std::vector<Coord> parcels, int map_size) : parcels_(std::move(parcels)) {
  if (parcels_.empty()) throw InvalidInput("region has no parcels");
  for (Coord c : parcels_)
    if (!in_map(c, map_size)) throw InvalidInput("region parcel " + to_string(c) + " outside the map");
  sorted_ = parcels_;
  std::sort(sorted_.begin(), sorted_.end());
  if (auto dup = std::adjacent_find(sorted_.begin(), sorted_.end()); dup != sorted_.end())
    throw InvalidInput("region lists parcel " + to_string(*dup) + " twice");

  for (Coord c : parcels_) {
    const Coord neighbours[] = {{c.x - 1, c.y}, {c.x + 1, c.y}, {c.x, c.y - 1}, {c.x, c.y + 1}};
    if (std::any_of(std::begin(neighbours), std::end(neighbours),
                    [&](Coord n) { return !contains(n); }))
      boundary_.push_back(c);
  }
}

Region Region::from_rects(std::vector<Rect> rects, int map_size) {
  if (rects.empty()) throw InvalidInput("region has no rectangles");
  std::vector<Coord> parcels;
  for (const Rect& r : rects) {
    if (r.x1 < r.x0 || r.y1 < r.y0)
      throw InvalidInput("rectangle corners out of order");
    for (int y = r.y0; y <= r.y1; ++y)
      for (int x = r.x0; x <= r.x1; ++x) parcels.push_back({x, y});
  }
  Region region(std::move(parcels), map_size);
  region.rects_ = std::move(rects);
  return region;
}

bool Region::contains(Coord c) const { return std::binary_search(sorted_.begin(), sorted_.end(), c); }

std::vector<AnnouncementGroup> group_waves(std::vector<Wave> waves) {
  std::sort(waves.begin(), waves.end(), [](const Wave& a, const Wave& b) {
    return std::tie(a.group_id, a.wave_id) < std::tie(b.group_id, b.wave_id);
  });
  std::set<int> seen_ids;
  std::vector<AnnouncementGroup> groups;
  for (Wave& w : waves) {
    if (!seen_ids.insert(w.wave_id).second)
      throw InvalidInput("duplicate wave id " + std::to_string(w.wave_id));
    if (w.sale_date < w.announce_date)
      throw InvalidInput("wave " + std::to_string(w.wave_id) + " is sold before it is announced");
    if (w.land_offered && *w.land_offered != w.region.size())
      throw InvalidInput("wave " + std::to_string(w.wave_id) + " offers " +
                         std::to_string(*w.land_offered) + " parcels but its region has " +
                         std::to_string(w.region.size()));
    if (groups.empty() || groups.back().group_id != w.group_id) {
      groups.push_back({w.group_id, w.announce_date, {}});
    } else if (groups.back().announce_date != w.announce_date) {
      throw InvalidInput("group " + std::to_string(w.group_id) +
                         " mixes announcement dates " + format_date(groups.back().announce_date) +
                         " and " + format_date(w.announce_date));
    }
    groups.back().waves.push_back(std::move(w));
  }
  return groups;
}

double euclidean_distance(Coord a, Coord b) {
  return std::sqrt(static_cast<double>(squared_distance(a, b)));
}

NearestHit nearest_in_region(std::span<const Coord> parcels, const Region& region) {
  if (parcels.empty()) throw InvalidInput("distance query with no parcels");

  // A parcel outside the region always has its nearest region parcel on the
  // region boundary, so only boundary parcels need to be scanned.
  for (std::size_t i = 0; i < parcels.size(); ++i)
    if (region.contains(parcels[i])) return {0.0, i, 0};

  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  std::size_t best_index = 0;
  for (std::size_t i = 0; i < parcels.size(); ++i) {
    for (Coord r : region.boundary()) {
      const std::int64_t d2 = squared_distance(parcels[i], r);
      if (d2 < best) {
        best = d2;
        best_index = i;
      }
    }
  }
  return {std::sqrt(static_cast<double>(best)), best_index, 0};
}

double distance_to_region(std::span<const Coord> parcels, const Region& region) {
  return nearest_in_region(parcels, region).distance;
}

NearestHit nearest_in_announcement(std::span<const Coord> parcels, const AnnouncementGroup& group) {
  if (group.waves.empty())
    throw InvalidInput("announcement group " + std::to_string(group.group_id) + " has no waves");
  NearestHit best{std::numeric_limits<double>::infinity(), 0, 0};
  for (std::size_t w = 0; w < group.waves.size(); ++w) {
    NearestHit hit = nearest_in_region(parcels, group.waves[w].region);
    if (hit.distance < best.distance) {
      best = hit;
      best.wave_index = w;
    }
  }
  return best;
}

double distance_to_announcement(std::span<const Coord> parcels, const AnnouncementGroup& group) {
  return nearest_in_announcement(parcels, group).distance;
}

std::vector<bool> near_flags(std::span<const double> distances) {
  if (distances.size() < 2)
    throw DegenerateGroup("median split needs at least two samples, got " +
                          std::to_string(distances.size()));
  const double median = stats::median(distances);
  std::vector<bool> near(distances.size());
  for (std::size_t i = 0; i < distances.size(); ++i) near[i] = distances[i] < median;
  return near;
}

std::map<std::string, bool> assign_near(std::span<const std::pair<std::string, double>> distances) {
  std::vector<double> values;
  values.reserve(distances.size());
  for (const auto& [id, d] : distances) values.push_back(d);
  const std::vector<bool> near = near_flags(values);
  std::map<std::string, bool> out;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if (!out.emplace(distances[i].first, near[i]).second)
      throw InvalidInput("duplicate sample id '" + distances[i].first + "'");
  }
  return out;
}

bool contiguity_check(std::span<const Coord> parcels, int threshold) {
  if (parcels.empty()) throw InvalidInput("contiguity check on an empty bundle");
  // Max pairwise Chebyshev distance is the larger bounding-box extent.
  auto [xmin, xmax] = std::minmax_element(parcels.begin(), parcels.end(),
                                          [](Coord a, Coord b) { return a.x < b.x; });
  auto [ymin, ymax] = std::minmax_element(parcels.begin(), parcels.end(),
                                          [](Coord a, Coord b) { return a.y < b.y; });
  return std::max(xmax->x - xmin->x, ymax->y - ymin->y) <= threshold;
}

}  // namespace gridhedonic::grid
