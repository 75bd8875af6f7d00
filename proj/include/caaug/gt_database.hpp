#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "caaug/geometry.hpp"
#include "caaug/kitti_io.hpp"
#include "caaug/rng.hpp"

namespace caaug {

/// Per-column point counts of an object over the minimal circular arc that
/// covers every occupied column; `start_col` is the arc's first column.
struct Rangebin {
  int start_col = 0;
  Eigen::ArrayXi bins;
};

/// Counts object points per azimuth column. The azimuth seam is handled by
/// picking the minimal-span arc, so objects crossing +-pi still bin
/// contiguously. First and last bins are nonzero by construction.
/// Throws EmptyObject for an empty cloud and SpanTooWide when the minimal
/// arc exceeds W/2 columns.
Rangebin compute_rangebin(const PointCloud& points, const LidarSpec& spec);

/// One database entry: the box, its surface points in original lidar-frame
/// coordinates, and the precomputed column histogram.
struct GtObject {
  Box3d box;
  PointCloud points;
  Eigen::ArrayXi rangebin;
  int start_col = 0;
  std::string source_frame;

  int span() const { return static_cast<int>(rangebin.size()); }       // l_g
  long point_count() const { return static_cast<long>(points.size()); }  // n_g
};

struct BuildStats {
  long objects = 0;
  long skipped_empty = 0;  ///< labels with zero interior points
  long skipped_wide = 0;   ///< labels whose column arc exceeded W/2
  long other_class = 0;    ///< non Car/Pedestrian/Cyclist labels, not stored
};

/// Ground-truth object database. Rangebins are precomputed under `spec`;
/// use `rebin` after loading when a different spec is wanted.
struct GtDatabase {
  LidarSpec spec;
  std::array<std::vector<GtObject>, 3> by_class;  // Car, Pedestrian, Cyclist

  const std::vector<GtObject>& objects(ClassLabel c) const { return by_class[static_cast<std::size_t>(c)]; }
  std::vector<GtObject>& objects(ClassLabel c) { return by_class[static_cast<std::size_t>(c)]; }
  std::size_t total() const { return by_class[0].size() + by_class[1].size() + by_class[2].size(); }

  /// Recomputes every rangebin under a new spec. Returns the number of
  /// objects dropped because their arc no longer fits.
  long rebin(const LidarSpec& new_spec);
};

/// Extracts one GtObject per Car/Pedestrian/Cyclist label with at least one
/// interior point; empty or over-wide labels are counted and skipped.
GtDatabase build_database(std::span<const FrameBundle> frames, const LidarSpec& spec, BuildStats* stats = nullptr);

struct SampleCounts {
  int car = 15;
  int pedestrian = 10;
  int cyclist = 10;

  int of(ClassLabel c) const {
    switch (c) {
      case ClassLabel::Car: return car;
      case ClassLabel::Pedestrian: return pedestrian;
      case ClassLabel::Cyclist: return cyclist;
      default: return 0;
    }
  }
};

struct GtRef {
  ClassLabel cls = ClassLabel::Car;
  int index = 0;
};

/// Uniform per-class sampling without replacement; a class with fewer
/// objects than requested is returned whole. Output order is the placement
/// candidate order.
std::vector<GtRef> sample_objects(const GtDatabase& db, const SampleCounts& counts, Rng& rng);

inline const GtObject& get(const GtDatabase& db, GtRef ref) { return db.objects(ref.cls)[static_cast<std::size_t>(ref.index)]; }

/// Versioned binary container (see docs/formats.md) plus a human-readable
/// <path>.index.txt sidecar with per-class counts and the spec.
void save_database(const GtDatabase& db, const std::filesystem::path& path);
GtDatabase load_database(const std::filesystem::path& path);

}  // namespace caaug
