#include "caaug/placement.hpp"

#include <algorithm>
#include <numeric>

namespace caaug {

namespace {

double column_mask(double v, double far_edge, FeasibilityRule rule) {
  return rule == FeasibilityRule::Unoccluded ? (v > far_edge ? 1.0 : 0.0) : (v < far_edge ? 1.0 : 0.0);
}

/// Rate at one start column.
double rate_at(const Validspace& v, const Eigen::ArrayXi& rangebin, double far_edge, int start,
               FeasibilityRule rule) {
  const int w = static_cast<int>(v.size());
  double acc = 0;
  for (Eigen::Index t = 0; t < rangebin.size(); ++t)
    acc += column_mask(v[(start + t) % w], far_edge, rule) * rangebin[t];
  return acc / static_cast<double>(rangebin.sum());
}

double far_edge_of(const Box3d& box) { return box.range() + box.length / 2; }

bool sat_overlap(const Box3d& a, const Box3d& b) {
  const Eigen::Matrix<double, 4, 2> ca = bev_corners(a);
  const Eigen::Matrix<double, 4, 2> cb = bev_corners(b);
  const double axes[4][2] = {{std::cos(a.yaw), std::sin(a.yaw)},
                             {-std::sin(a.yaw), std::cos(a.yaw)},
                             {std::cos(b.yaw), std::sin(b.yaw)},
                             {-std::sin(b.yaw), std::cos(b.yaw)}};
  for (const auto& axis : axes) {
    double min_a = std::numeric_limits<double>::infinity(), max_a = -min_a;
    double min_b = min_a, max_b = max_a;
    for (int i = 0; i < 4; ++i) {
      const double pa = ca(i, 0) * axis[0] + ca(i, 1) * axis[1];
      const double pb = cb(i, 0) * axis[0] + cb(i, 1) * axis[1];
      min_a = std::min(min_a, pa);
      max_a = std::max(max_a, pa);
      min_b = std::min(min_b, pb);
      max_b = std::max(max_b, pb);
    }
    if (max_a < min_b || max_b < min_a) return false;
  }
  return true;
}

/// Corner probe with a 1e-9 m inclusive pad: coincident boxes must always
/// collide even though their corners sit on the exact boundary.
bool corner_inside(double qx, double qy, const Box3d& box) {
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  const double dx = qx - box.cx, dy = qy - box.cy;
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  return std::abs(lx) <= box.length / 2 + 1e-9 && std::abs(ly) <= box.width / 2 + 1e-9;
}

/// Corner test run in both directions; the guarantee that no accepted box
/// ever holds another box's corner needs the mutual check, and crossing
/// configurations stay invisible either way.
bool corners_inside_any(const Box3d& candidate, std::span<const Box3d> placed) {
  const Eigen::Matrix<double, 4, 2> cand_corners = bev_corners(candidate);
  for (const Box3d& b : placed) {
    for (int i = 0; i < 4; ++i) {
      if (corner_inside(cand_corners(i, 0), cand_corners(i, 1), b)) return true;
    }
    const Eigen::Matrix<double, 4, 2> placed_corners = bev_corners(b);
    for (int i = 0; i < 4; ++i) {
      if (corner_inside(placed_corners(i, 0), placed_corners(i, 1), candidate)) return true;
    }
  }
  return false;
}

}  // namespace

Eigen::ArrayXd feasibility_vector(const Validspace& v, const Eigen::ArrayXi& rangebin, double far_edge,
                                  FeasibilityRule rule) {
  const auto w = static_cast<int>(v.size());
  const auto span = static_cast<int>(rangebin.size());
  // 0/1 column mask with a wrapped tail so every window is contiguous
  Eigen::ArrayXd mask(w + span);
  for (int j = 0; j < w; ++j) mask[j] = column_mask(v[j], far_edge, rule);
  mask.segment(w, span) = mask.head(span);
  const Eigen::ArrayXd weights = rangebin.cast<double>();
  const double total = weights.sum();
  Eigen::ArrayXd rate(w);
  for (int j = 0; j < w; ++j) rate[j] = (mask.segment(j, span) * weights).sum() / total;
  return rate;
}

Eigen::ArrayXd feasibility_vector(const Validspace& v, const GtObject& obj, FeasibilityRule rule) {
  return feasibility_vector(v, obj.rangebin, far_edge_of(obj.box), rule);
}

bool collision_check(const Box3d& candidate, std::span<const Box3d> placed, CollisionMode mode) {
  if (mode == CollisionMode::CornerInBox) return corners_inside_any(candidate, placed);
  for (const Box3d& b : placed)
    if (sat_overlap(candidate, b)) return true;
  return false;
}

PlacedObject rotate_to_column(const GtObject& obj, int target_col, const LidarSpec& spec) {
  const double dtheta =
      normalize_angle((obj.start_col - target_col) * 2.0 * kPi / static_cast<double>(spec.width));
  auto [points, box] = rotate_z(obj.points, obj.box, dtheta);
  return PlacedObject{dtheta, box, std::move(points)};
}

const char* reject_reason_name(RejectReason r) {
  return r == RejectReason::NoFeasibleColumn ? "no_feasible_column" : "all_collide";
}

Validspace update_validspace(Validspace v, const Box3d& placed, int start_col, int span_cols) {
  const auto w = static_cast<int>(v.size());
  const double r = placed.range();
  for (int t = 0; t < span_cols; ++t) v[(start_col + t) % w] = r;
  return v;
}

PlacementResult location_check(const Validspace& v, const LidarSpec& spec,
                               std::span<const GtObject* const> candidates,
                               std::span<const Box3d> existing_boxes, const PlacementConfig& config,
                               Rng& rng) {
  if (v.size() != spec.width)
    throw SpecMismatch("location_check: validspace length " + std::to_string(v.size()) +
                       " != spec width " + std::to_string(spec.width));

  PlacementResult result;
  Validspace live = v;
  std::vector<Box3d> placed(existing_boxes.begin(), existing_boxes.end());

  std::vector<int> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  if (config.near_to_far || config.update_validspace) {
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return candidates[static_cast<std::size_t>(a)]->box.range() <
             candidates[static_cast<std::size_t>(b)]->box.range();
    });
  }

  for (const int ci : order) {
    const GtObject& obj = *candidates[static_cast<std::size_t>(ci)];
    if (obj.span() > spec.width)
      throw SpecMismatch("location_check: candidate arc wider than the image");

    if (!config.rotate) {
      // plain database sampling: original pose, collision check only
      if (collision_check(obj.box, placed, config.collision)) {
        result.rejected.push_back({ci, RejectReason::AllCollide,
                                   rate_at(live, obj.rangebin, far_edge_of(obj.box), obj.start_col, config.rule)});
        continue;
      }
      AcceptedPlacement acc;
      acc.candidate = ci;
      acc.dtheta = 0.0;
      acc.target_col = obj.start_col;
      acc.rate = rate_at(live, obj.rangebin, far_edge_of(obj.box), obj.start_col, config.rule);
      acc.box = obj.box;
      acc.points = obj.points;
      placed.push_back(acc.box);
      result.accepted.push_back(std::move(acc));
      continue;
    }

    const Eigen::ArrayXd rate = feasibility_vector(live, obj, config.rule);

    // candidate start columns: full circle, a linear scan, or an explicit
    // window the whole arc must fit into
    int lo = 0;
    int hi = spec.width - 1;
    if (!config.wrap_columns) hi = spec.width - obj.span();
    if (config.azimuth_window) {
      lo = std::max(lo, config.azimuth_window->first);
      hi = std::min(hi, config.azimuth_window->second - obj.span() + 1);
    }

    std::vector<int> feasible;
    double best_rate = 0.0;
    for (int j = lo; j <= hi; ++j) {
      best_rate = std::max(best_rate, rate[j]);
      if (rate[j] > config.min_rate) feasible.push_back(j);
    }

    if (feasible.empty()) {
      result.rejected.push_back({ci, RejectReason::NoFeasibleColumn, best_rate});
      continue;
    }

    bool accepted = false;
    int attempts = 0;
    while (!feasible.empty()) {
      if (config.max_angle_retries > 0 && attempts >= config.max_angle_retries) break;
      const int pick = rng.index(feasible.size());
      const int target = feasible[static_cast<std::size_t>(pick)];
      const double dtheta =
          normalize_angle((obj.start_col - target) * 2.0 * kPi / static_cast<double>(spec.width));
      const Box3d box_at = rotate_z(obj.box, dtheta);
      if (collision_check(box_at, placed, config.collision)) {
        feasible.erase(feasible.begin() + pick);
        ++attempts;
        continue;
      }
      PlacedObject moved = rotate_to_column(obj, target, spec);
      AcceptedPlacement acc;
      acc.candidate = ci;
      acc.dtheta = moved.dtheta;
      acc.target_col = target;
      acc.rate = rate[target];
      acc.box = moved.box;
      acc.points = std::move(moved.points);
      placed.push_back(acc.box);
      if (config.update_validspace) live = update_validspace(std::move(live), acc.box, target, obj.span());
      result.accepted.push_back(std::move(acc));
      accepted = true;
      break;
    }
    if (!accepted) result.rejected.push_back({ci, RejectReason::AllCollide, best_rate});
  }
  return result;
}

}  // namespace caaug
