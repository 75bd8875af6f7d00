#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "caaug/gt_database.hpp"
#include "caaug/scene_partition.hpp"

namespace caaug {

enum class CollisionMode {
  CornerInBox,     ///< candidate collides iff one of its 4 bev corners lies inside a placed box
  PolygonOverlap,  ///< candidate collides iff the two bev rectangles intersect (separating axis)
};

/// Which side of the nearest-obstacle comparison scores a column. Unoccluded
/// (the default) counts columns whose obstacle sits beyond the box far edge,
/// so the rate is the fraction of visible points and a threshold of 0.8
/// tolerates thin occluders. Occluded inverts the comparison; kept for
/// compatibility with pipelines that score the occluded fraction instead.
enum class FeasibilityRule { Unoccluded, Occluded };

struct PlacementConfig {
  double min_rate = 0.8;  ///< columns with rate strictly above this are feasible
  int max_angle_retries = 0;  ///< cap on collision-rejected draws per object; 0 = drain all columns
  std::optional<std::pair<int, int>> azimuth_window;  ///< inclusive column window the whole span must fit in
  bool update_validspace = false;  ///< overwrite covered columns with the placed box range
  bool near_to_far = false;        ///< process candidates by ascending center range
  bool wrap_columns = true;        ///< false restricts start columns to [0, W - span]
  bool rotate = true;  ///< false keeps original poses (plain database sampling, collision check only)
  CollisionMode collision = CollisionMode::CornerInBox;
  FeasibilityRule rule = FeasibilityRule::Unoccluded;
};

/// Rate of object points that fall on feasible columns, for every candidate
/// start column j in [0, W): score of rangebin against V[(j+t) mod W]
/// compared to `far_edge` = box range + length/2.
Eigen::ArrayXd feasibility_vector(const Validspace& v, const Eigen::ArrayXi& rangebin, double far_edge,
                                  FeasibilityRule rule = FeasibilityRule::Unoccluded);
Eigen::ArrayXd feasibility_vector(const Validspace& v, const GtObject& obj,
                                  FeasibilityRule rule = FeasibilityRule::Unoccluded);

/// True when the candidate collides with any placed box under the chosen
/// mode. CornerInBox is one-directional (only the candidate's corners are
/// tested) and can miss crossing configurations; PolygonOverlap is exact for
/// convex rectangles.
bool collision_check(const Box3d& candidate, std::span<const Box3d> placed, CollisionMode mode);

struct PlacedObject {
  double dtheta = 0.0;
  Box3d box;
  PointCloud points;
};

/// Rigid rotation taking the object's arc to `target_col`: dtheta =
/// (start_col - target_col) * 2*pi / W, normalized. Recomputing the rangebin
/// on the result yields start_col == target_col with identical bins.
PlacedObject rotate_to_column(const GtObject& obj, int target_col, const LidarSpec& spec);

enum class RejectReason { NoFeasibleColumn, AllCollide };

const char* reject_reason_name(RejectReason r);

struct AcceptedPlacement {
  int candidate = 0;  ///< index into the candidate list
  double dtheta = 0.0;
  int target_col = 0;
  double rate = 0.0;  ///< feasibility rate at the accepted column
  Box3d box;
  PointCloud points;
};

struct RejectedPlacement {
  int candidate = 0;
  RejectReason reason = RejectReason::NoFeasibleColumn;
  double best_rate = 0.0;
};

struct PlacementResult {
  std::vector<AcceptedPlacement> accepted;
  std::vector<RejectedPlacement> rejected;
};

/// The location check: per candidate, collect feasible start columns, draw
/// uniformly, rotate there and keep the first collision-free pose. Collisions
/// are tested against existing boxes plus previously accepted ones, colliding
/// columns are deleted and redrawn. With update_validspace the candidates are
/// processed near to far and each acceptance overwrites its covered columns.
/// Throws SpecMismatch when v's length differs from spec.width or a
/// candidate's arc exceeds it.
PlacementResult location_check(const Validspace& v, const LidarSpec& spec,
                               std::span<const GtObject* const> candidates,
                               std::span<const Box3d> existing_boxes, const PlacementConfig& config,
                               Rng& rng);

/// Overwrites v over columns [start_col, start_col + span_cols) (circular)
/// with the placed box's center range; other entries are untouched.
Validspace update_validspace(Validspace v, const Box3d& placed, int start_col, int span_cols);

}  // namespace caaug
