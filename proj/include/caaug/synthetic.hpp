#pragma once

#include <vector>

#include "caaug/kitti_io.hpp"
#include "caaug/rng.hpp"

namespace caaug {

/// A curved vertical obstacle: one return at exactly `range` meters on every
/// beam whose column lies in [col_begin, col_end] (inclusive) and whose hit
/// sits between the ground and `height` above it.
struct WallSpec {
  int col_begin = 0;
  int col_end = 0;
  double range = 10.0;
  double height = 2.0;
};

/// Deterministic beam-cast scene: one ray per range-image pixel, nearest hit
/// wins among ground plane, walls and box surfaces. Ground/obstacle
/// provenance is exact, which makes partition and validspace oracles exact.
struct SceneDescriptor {
  LidarSpec spec;
  double ground_range = 60.0;   ///< planar radius beyond which ground beams return nothing
  double ground_z = -1.73;
  double ground_noise = 0.0;    ///< uniform z jitter amplitude on ground returns
  std::vector<WallSpec> walls;
  std::vector<Box3d> boxes;     ///< parked objects; labelled, and hit by beams when cast_box_points
  bool cast_box_points = true;
};

FrameBundle generate_synthetic_scene(const SceneDescriptor& d, Rng& rng);

}  // namespace caaug
