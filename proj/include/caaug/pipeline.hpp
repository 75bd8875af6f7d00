#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "caaug/config.hpp"
#include "caaug/kitti_io.hpp"
#include "caaug/pipeline_types.hpp"

namespace caaug {

/// Per-frame seed: master seed mixed with the numeric frame id (or a hash of
/// the name when non-numeric), so results do not depend on worker count or
/// frame selection.
std::uint64_t frame_seed(std::uint64_t master, const std::string& frame_id);

/// The full per-frame pipeline: partition, validspace, sampling, location
/// check, merge, occlusion strategy, global augmentations, provenance strip.
/// Deterministic given (input, db, config, frame_seed).
AugmentResult augment_frame(const FrameBundle& in, const GtDatabase& db, const AugConfig& cfg,
                            std::uint64_t seed);

/// Applies a recorded whole-frame transform to a cloud and its boxes:
/// flip over the x axis, rotation about z, uniform scale, in that order.
void apply_global_transform(PointCloud& cloud, std::vector<Box3d>& boxes, const GlobalApplied& g);

struct BatchOptions {
  std::vector<std::string> frames;  ///< empty = every frame under the root
  int workers = 1;
  std::string database_path;  ///< recorded in manifests for later validation
};

struct BatchResult {
  long frames_done = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // frame id, message
};

/// Augments a KITTI directory tree into out_dir (velodyne/, label_2/,
/// manifest/, stats/). Frames are independent work units; any worker count
/// produces identical outputs.
BatchResult run_batch(const std::filesystem::path& kitti_root, const GtDatabase& db, const AugConfig& cfg,
                      const std::filesystem::path& out_dir, const BatchOptions& options);

struct Violation {
  std::string frame_id;
  std::string invariant;
  std::string detail;
};

/// Re-checks an augmented output tree from its manifests: range preservation,
/// feasibility above threshold, collision freedom, label counts, culling and
/// drilling postconditions, and byte equality against a deterministic replay.
std::vector<Violation> validate_output(const std::filesystem::path& out_dir);

/// Human-readable aggregation of every stats/<id>.txt under out_dir.
std::string aggregate_stats(const std::filesystem::path& out_dir);

}  // namespace caaug
