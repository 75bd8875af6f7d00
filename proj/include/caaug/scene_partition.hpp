#pragma once

#include <limits>
#include <unordered_map>
#include <vector>

#include "caaug/geometry.hpp"

namespace caaug {

/// Square vertical pillars over the xy plane. Cell (i, j) covers
/// [i*d, (i+1)*d) x [j*d, (j+1)*d); indices come straight from floor(x/d),
/// floor(y/d) with no origin offset.
struct PillarGrid {
  struct Cell {
    double z_min = std::numeric_limits<double>::infinity();
    double z_max = -std::numeric_limits<double>::infinity();
    std::vector<Eigen::Index> members;
    double span() const { return z_max - z_min; }
  };

  double cell_size = 0.25;
  std::unordered_map<std::uint64_t, Cell> cells;

  static std::uint64_t key(int ix, int iy) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix)) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(iy));
  }
  static std::uint64_t key_of(double x, double y, double d) {
    return key(static_cast<int>(std::floor(x / d)), static_cast<int>(std::floor(y / d)));
  }

  static PillarGrid build(const PointCloud& cloud, double d);
};

/// Disjoint obstacle/ground index sets covering a whole frame, both in
/// ascending point order.
struct Partition {
  std::vector<Eigen::Index> obstacle;
  std::vector<Eigen::Index> ground;
};

/// Pillar-span split: every point of a pillar whose z span strictly exceeds
/// sigma is an obstacle point, all other points are ground.
/// Throws EmptyCloud for a frame with no points.
Partition partition_scene(const PointCloud& cloud, double d, double sigma);

/// Per-column nearest-obstacle range, +inf where a column holds no obstacle
/// point. Length equals spec.width and every entry is > 0.
using Validspace = Eigen::ArrayXd;

/// Column assignment uses azimuth only, so obstacle points above or below the
/// vertical field of view still shrink their column.
Validspace compute_validspace(const PointCloud& cloud, const Partition& partition, const LidarSpec& spec);

}  // namespace caaug
