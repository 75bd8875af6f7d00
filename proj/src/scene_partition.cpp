#include "caaug/scene_partition.hpp"

namespace caaug {

PillarGrid PillarGrid::build(const PointCloud& cloud, double d) {
  PillarGrid grid;
  grid.cell_size = d;
  grid.cells.reserve(static_cast<std::size_t>(cloud.size()) / 4 + 1);
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    Cell& cell = grid.cells[key_of(cloud.data(i, 0), cloud.data(i, 1), d)];
    const double z = cloud.data(i, 2);
    cell.z_min = std::min(cell.z_min, z);
    cell.z_max = std::max(cell.z_max, z);
    cell.members.push_back(i);
  }
  return grid;
}

Partition partition_scene(const PointCloud& cloud, double d, double sigma) {
  if (cloud.empty()) throw EmptyCloud("partition_scene: frame has no points");
  const PillarGrid grid = PillarGrid::build(cloud, d);
  Partition part;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const PillarGrid::Cell& cell = grid.cells.at(PillarGrid::key_of(cloud.data(i, 0), cloud.data(i, 1), d));
    if (cell.span() > sigma) {
      part.obstacle.push_back(i);
    } else {
      part.ground.push_back(i);
    }
  }
  return part;
}

Validspace compute_validspace(const PointCloud& cloud, const Partition& partition, const LidarSpec& spec) {
  Validspace v = Validspace::Constant(spec.width, std::numeric_limits<double>::infinity());
  for (const Eigen::Index i : partition.obstacle) {
    const auto col = column_of(cloud.xyz(i), spec);
    if (!col) continue;
    const double r = cloud.range(i);
    if (r < v[*col]) v[*col] = r;
  }
  return v;
}

}  // namespace caaug
