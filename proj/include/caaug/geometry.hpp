#pragma once

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include "caaug/errors.hpp"
#include "caaug/types.hpp"

namespace caaug {

/// Real-valued azimuth column: u = (1 - atan2(y, x) / pi) * W / 2.
/// Decreases monotonically with azimuth; one full turn spans W columns, so a
/// rotation by -2*pi*k/W shifts u by exactly +k.
template <typename Derived>
double column_real(const Eigen::MatrixBase<Derived>& p, const LidarSpec& spec) {
  return 0.5 * (1.0 - std::atan2(p.y(), p.x()) / kPi) * static_cast<double>(spec.width);
}

/// Real-valued row: v = (1 - (asin(z/r) - fov_down) / fov) * H.
template <typename Derived>
double row_real(const Eigen::MatrixBase<Derived>& p, const LidarSpec& spec, double r) {
  const double elev = std::asin(std::clamp(p.z() / r, -1.0, 1.0));
  return (1.0 - (elev - spec.fov_down) / spec.fov()) * static_cast<double>(spec.height);
}

inline int wrap_column(long long u, int width) {
  long long m = u % width;
  if (m < 0) m += width;
  return static_cast<int>(m);
}

/// Azimuth column of a point, independent of the vertical field of view.
/// nullopt only for a point at the sensor origin.
template <typename Derived>
std::optional<int> column_of(const Eigen::MatrixBase<Derived>& p, const LidarSpec& spec) {
  if (p.template head<3>().squaredNorm() == 0.0) return std::nullopt;
  const double u = column_real(p, spec);
  if (!std::isfinite(u)) return std::nullopt;
  return wrap_column(static_cast<long long>(std::floor(u)), spec.width);
}

/// Spherical projection of one point onto the range image. The column wraps
/// modulo W; nullopt when the unfloored row falls outside [0, H).
/// Throws ZeroRange for a point at the origin.
template <typename Derived>
std::optional<Pixel> spherical_project(const Eigen::MatrixBase<Derived>& p, const LidarSpec& spec) {
  const double r = p.template head<3>().norm();
  if (r == 0.0) throw ZeroRange("spherical_project: point at the sensor origin");
  const double v = row_real(p, spec, r);
  if (!(v >= 0.0 && v < static_cast<double>(spec.height))) return std::nullopt;
  const long long u = static_cast<long long>(std::floor(column_real(p, spec)));
  return Pixel{wrap_column(u, spec.width), static_cast<int>(std::floor(v))};
}

/// Rotates the xy plane of every point about the origin; z and intensity
/// are untouched, so every range is preserved.
inline void rotate_z_inplace(PointCloud::Data& data, double dtheta) {
  const double c = std::cos(dtheta);
  const double s = std::sin(dtheta);
  const Eigen::ArrayXd x = data.col(0);
  const Eigen::ArrayXd y = data.col(1);
  data.col(0) = (c * x - s * y).matrix();
  data.col(1) = (s * x + c * y).matrix();
}

template <typename S>
Box3<S> rotate_z(const Box3<S>& box, double dtheta) {
  const S c = static_cast<S>(std::cos(dtheta));
  const S s = static_cast<S>(std::sin(dtheta));
  Box3<S> out = box;
  out.cx = c * box.cx - s * box.cy;
  out.cy = s * box.cx + c * box.cy;
  out.yaw = static_cast<S>(normalize_angle(static_cast<double>(box.yaw) + dtheta));
  return out;
}

/// Rigid z-rotation of an object: points and box move together, the box yaw
/// follows the rotation so the label stays consistent with the points.
inline std::pair<PointCloud, Box3d> rotate_z(const PointCloud& points, const Box3d& box, double dtheta) {
  PointCloud out = points;
  rotate_z_inplace(out.data, dtheta);
  return {std::move(out), rotate_z(box, dtheta)};
}

/// Planar corners of the yaw-rotated length x width rectangle, one per row:
/// front-left, front-right, rear-right, rear-left.
template <typename S>
Eigen::Matrix<S, 4, 2> bev_corners(const Box3<S>& box) {
  const S hl = box.length / S(2);
  const S hw = box.width / S(2);
  Eigen::Matrix<S, 4, 2> local;
  local << hl, hw, hl, -hw, -hl, -hw, -hl, hw;
  const S c = std::cos(box.yaw);
  const S s = std::sin(box.yaw);
  Eigen::Matrix<S, 2, 2> rot;
  rot << c, -s, s, c;
  Eigen::Matrix<S, 4, 2> out = local * rot.transpose();
  out.col(0).array() += box.cx;
  out.col(1).array() += box.cy;
  return out;
}

/// Point-in-rectangle test in the box's yaw-aligned frame; the boundary
/// counts as inside.
template <typename S, typename Derived>
bool point_in_bev_box(const Eigen::MatrixBase<Derived>& q, const Box3<S>& box) {
  const S c = std::cos(box.yaw);
  const S s = std::sin(box.yaw);
  const S dx = q.x() - box.cx;
  const S dy = q.y() - box.cy;
  const S lx = c * dx + s * dy;
  const S ly = -s * dx + c * dy;
  return std::abs(lx) <= box.length / S(2) && std::abs(ly) <= box.width / S(2);
}

/// Indices of points inside the box in all three yaw-aligned axes; the
/// vertical bound is cz +- height/2, boundaries inclusive.
inline std::vector<Eigen::Index> points_in_box_3d(const PointCloud& cloud, const Box3d& box) {
  std::vector<Eigen::Index> out;
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = box.length / 2;
  const double hw = box.width / 2;
  const double hh = box.height / 2;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const double dx = cloud.data(i, 0) - box.cx;
    const double dy = cloud.data(i, 1) - box.cy;
    const double dz = cloud.data(i, 2) - box.cz;
    if (std::abs(dz) > hh) continue;
    const double lx = c * dx + s * dy;
    if (std::abs(lx) > hl) continue;
    const double ly = -s * dx + c * dy;
    if (std::abs(ly) > hw) continue;
    out.push_back(i);
  }
  return out;
}

}  // namespace caaug
