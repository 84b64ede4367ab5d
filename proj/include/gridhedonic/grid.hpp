#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gridhedonic/calendar.hpp"

namespace gridhedonic::grid {

inline constexpr int kDefaultMapSize = 408;
// Edge of the largest estate (24x24); bundles wider than this are treated as scattered.
inline constexpr int kDefaultContiguityThreshold = 24;

struct Coord {
  int x = 0;
  int y = 0;
  auto operator<=>(const Coord&) const = default;
};

// Axis-aligned block of parcels, corners inclusive.
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  auto operator<=>(const Rect&) const = default;
  std::size_t area() const {
    return static_cast<std::size_t>(x1 - x0 + 1) * static_cast<std::size_t>(y1 - y0 + 1);
  }
};

bool in_map(Coord c, int map_size = kDefaultMapSize);

// A non-empty set of distinct in-map parcels. Immutable once built; keeps a
// sorted index for membership and the list of boundary parcels (those with a
// 4-neighbour outside the region) for nearest-distance queries.
class Region {
 public:
  explicit Region(std::vector<Coord> parcels, int map_size = kDefaultMapSize);
  static Region from_rects(std::vector<Rect> rects, int map_size = kDefaultMapSize);

  std::span<const Coord> parcels() const { return parcels_; }
  std::span<const Coord> boundary() const { return boundary_; }
  // Non-empty only when the region was built from rectangles.
  std::span<const Rect> rects() const { return rects_; }
  std::size_t size() const { return parcels_.size(); }
  bool contains(Coord c) const;

 private:
  std::vector<Coord> parcels_;
  std::vector<Coord> sorted_;
  std::vector<Coord> boundary_;
  std::vector<Rect> rects_;
};

struct Wave {
  int wave_id = 0;
  int group_id = 0;
  std::string name;
  Date announce_date;
  Date sale_date;
  Region region;
  // Declared offering size; when present it must match the region.
  std::optional<std::size_t> land_offered;
};

// All waves released by one announcement date.
struct AnnouncementGroup {
  int group_id = 0;
  Date announce_date;
  std::vector<Wave> waves;

  bool multi() const { return waves.size() > 1; }
};

// Validates each wave and groups them by group_id (ascending). Throws
// InvalidInput when waves of one group disagree on announce_date or a wave
// is inconsistent (sale before announcement, land_offered mismatch).
std::vector<AnnouncementGroup> group_waves(std::vector<Wave> waves);

double euclidean_distance(Coord a, Coord b);

struct NearestHit {
  double distance = 0.0;
  // Index into the queried parcel list of the parcel achieving the minimum.
  std::size_t parcel_index = 0;
  // Index of the wave (within the group) achieving the minimum.
  std::size_t wave_index = 0;
};

// Minimum Euclidean distance over all (parcel, region parcel) pairs.
double distance_to_region(std::span<const Coord> parcels, const Region& region);
NearestHit nearest_in_region(std::span<const Coord> parcels, const Region& region);

// Minimum of distance_to_region over every wave of the group.
double distance_to_announcement(std::span<const Coord> parcels, const AnnouncementGroup& group);
NearestHit nearest_in_announcement(std::span<const Coord> parcels, const AnnouncementGroup& group);

// near[i] = distances[i] < median(distances). Throws DegenerateGroup for
// fewer than two distances.
std::vector<bool> near_flags(std::span<const double> distances);
std::map<std::string, bool> assign_near(std::span<const std::pair<std::string, double>> distances);

// True iff the bundle's max pairwise Chebyshev distance is within threshold.
bool contiguity_check(std::span<const Coord> parcels, int threshold = kDefaultContiguityThreshold);

}  // namespace gridhedonic::grid
