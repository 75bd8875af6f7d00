#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "caaug/geometry.hpp"

namespace caaug {

/// Range-view occlusion strategies applied to a merged scene+objects cloud.
enum class Strategy { None, Naive, Culling, Drilling };

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);  // throws UnknownStrategy

/// W x H nearest-point grid. Every in-view point lands exactly once: in its
/// cell if it wins the z-buffer (ties go to the lowest index) or in the
/// shadow list otherwise. Points at zero range or outside the vertical fov
/// go to `unprojected`.
struct RangeImage {
  struct Cell {
    std::int32_t point = -1;
    double range = std::numeric_limits<double>::infinity();
    bool empty() const { return point < 0; }
  };

  LidarSpec spec;
  std::vector<Cell> cells;  // row-major, index = v * width + u
  std::vector<std::pair<std::int32_t, Pixel>> shadow;
  std::vector<std::int32_t> unprojected;

  Cell& at(int u, int v) { return cells[static_cast<std::size_t>(v) * spec.width + u]; }
  const Cell& at(int u, int v) const { return cells[static_cast<std::size_t>(v) * spec.width + u]; }
  std::size_t occupied() const;
};

RangeImage render_range_image(const PointCloud& cloud, const LidarSpec& spec);

struct ObjectOcclusion {
  int object_id = 0;
  long original = 0;  ///< n_g
  long retained = 0;
  double fraction = 0.0;
  bool dropped = false;
};

struct OcclusionReport {
  Strategy strategy = Strategy::None;
  std::vector<ObjectOcclusion> objects;
  std::vector<std::int32_t> deleted_background;
  std::vector<int> dropped_objects;

  /// Line-oriented form consumed by the stats command.
  std::string to_text() const;
};

/// Strict z-buffer: keep cell winners of any provenance, drop every shadowed
/// point. Points outside the vertical fov are kept untouched.
PointCloud apply_naive(const PointCloud& merged, const LidarSpec& spec);

/// Z-buffer conflicts involving inserted points only, then drop whole objects
/// that keep fewer than min_points points or less than min_fraction of their
/// surface (boundaries survive). Background-vs-background conflicts are left
/// alone.
std::pair<PointCloud, OcclusionReport> apply_culling(const PointCloud& merged, const LidarSpec& spec,
                                                     int min_points = 4, double min_fraction = 0.25);

/// Deletes every background point that shares a pixel with an inserted point;
/// object-vs-object conflicts resolve by z-buffer, everything else is kept.
std::pair<PointCloud, OcclusionReport> apply_drilling(const PointCloud& merged, const LidarSpec& spec);

/// Dispatch on strategy; None returns the merged cloud unchanged.
std::pair<PointCloud, OcclusionReport> resolve(const PointCloud& merged, const LidarSpec& spec, Strategy strategy,
                                               int culling_min_points = 4, double culling_min_fraction = 0.25);

}  // namespace caaug
