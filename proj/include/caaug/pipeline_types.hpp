#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "caaug/kitti_io.hpp"
#include "caaug/range_image.hpp"

namespace caaug {

struct StageTimings {
  double partition_ms = 0;
  double validspace_ms = 0;
  double sampling_ms = 0;
  double placement_ms = 0;
  double occlusion_ms = 0;
  double global_ms = 0;
  double total_ms = 0;
};

/// Per-frame bookkeeping. Everything except the timing lines is
/// deterministic under a fixed seed.
struct FrameStats {
  std::string frame_id;
  int candidates = 0;
  int accepted = 0;
  int rejected_no_feasible = 0;
  int rejected_all_collide = 0;
  std::vector<std::pair<int, double>> rates;  // candidate index -> feasibility rate
  OcclusionReport occlusion;
  StageTimings timings;

  std::string to_text() const;
  static FrameStats from_text(const std::string& text);
};

/// One accepted insertion as recorded in the manifest. `box` is the pose
/// before global augmentations; the manifest's `global` block maps it to the
/// written label.
struct InsertionRecord {
  int object_id = 0;  ///< per-frame id, also the provenance tag
  ClassLabel cls = ClassLabel::Car;
  int db_index = 0;
  std::string source_frame;
  double dtheta = 0.0;
  int start_col_from = 0;
  int start_col_to = 0;
  double rate = 0.0;
  long n_points = 0;
  bool culled = false;
  Box3d box;
};

struct RejectionRecord {
  int candidate = 0;
  ClassLabel cls = ClassLabel::Car;
  int db_index = 0;
  std::string reason;
  double best_rate = 0.0;
};

struct GlobalApplied {
  bool flipped = false;
  double rotation = 0.0;
  double scale = 1.0;
};

/// Replay recipe for one augmented frame: seeds, config echo and the exact
/// transforms applied. Serialized as JSON next to the frame outputs.
struct Manifest {
  std::string frame_id;
  std::string kitti_root;
  std::string database_path;
  std::uint64_t master_seed = 0;
  std::uint64_t frame_seed = 0;
  Strategy strategy = Strategy::None;
  std::string config_text;
  GlobalApplied global;
  std::vector<InsertionRecord> insertions;
  std::vector<RejectionRecord> rejections;

  std::string to_json() const;
  static Manifest from_json(const std::string& text);
};

struct AugmentResult {
  FrameBundle bundle;        ///< provenance-stripped output frame
  PointCloud occluded;       ///< post-occlusion, pre-global cloud with tags (for checks)
  FrameStats stats;
  Manifest manifest;
};

}  // namespace caaug
