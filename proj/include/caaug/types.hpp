#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace caaug {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a > kPi) {
    a -= 2.0 * kPi;
  } else if (a <= -kPi) {
    a += 2.0 * kPi;
  }
  return a;
}

enum class ClassLabel : std::uint8_t { Car = 0, Pedestrian = 1, Cyclist = 2, Other = 3 };

inline const char* class_name(ClassLabel c) {
  switch (c) {
    case ClassLabel::Car: return "Car";
    case ClassLabel::Pedestrian: return "Pedestrian";
    case ClassLabel::Cyclist: return "Cyclist";
    default: return "Other";
  }
}

inline ClassLabel class_from_name(const std::string& name) {
  if (name == "Car") return ClassLabel::Car;
  if (name == "Pedestrian") return ClassLabel::Pedestrian;
  if (name == "Cyclist") return ClassLabel::Cyclist;
  return ClassLabel::Other;
}

enum class Provenance : std::uint8_t { Ground = 0, Obstacle = 1, Inserted = 2 };

struct PointTag {
  Provenance kind = Provenance::Ground;
  std::int32_t object_id = -1;  ///< >= 0 only for inserted points
  bool operator==(const PointTag&) const = default;
};

/// Point cloud in the lidar frame (x forward, y left, z up), stored as an
/// N x 4 row-major matrix of (x, y, z, intensity). Provenance tags, when
/// present, cover every point.
struct PointCloud {
  using Data = Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor>;

  Data data;
  std::vector<PointTag> tags;

  Eigen::Index size() const { return data.rows(); }
  bool empty() const { return data.rows() == 0; }
  bool tagged() const { return !tags.empty(); }

  auto xyz(Eigen::Index i) const { return data.row(i).template head<3>(); }
  double range(Eigen::Index i) const { return xyz(i).norm(); }

  /// Rows of `data` selected by `idx`, tags carried along when present.
  PointCloud select(const std::vector<Eigen::Index>& idx) const {
    PointCloud out;
    out.data.resize(static_cast<Eigen::Index>(idx.size()), 4);
    for (Eigen::Index k = 0; k < out.data.rows(); ++k) out.data.row(k) = data.row(idx[static_cast<std::size_t>(k)]);
    if (tagged()) {
      out.tags.reserve(idx.size());
      for (Eigen::Index i : idx) out.tags.push_back(tags[static_cast<std::size_t>(i)]);
    }
    return out;
  }

  void append(const PointCloud& other) {
    const Eigen::Index n = data.rows();
    data.conservativeResize(n + other.data.rows(), 4);
    data.bottomRows(other.data.rows()) = other.data;
    if (tagged() || other.tagged()) {
      tags.resize(static_cast<std::size_t>(n), PointTag{});
      if (other.tagged()) {
        tags.insert(tags.end(), other.tags.begin(), other.tags.end());
      } else {
        tags.resize(static_cast<std::size_t>(data.rows()), PointTag{});
      }
    }
  }
};

/// Oriented 3D box, 7 degrees of freedom: center, dimensions, yaw about +z.
/// `length` runs along the heading given by `yaw`, normalized to (-pi, pi].
template <typename S>
struct Box3 {
  S cx{}, cy{}, cz{};
  S length{}, width{}, height{};
  S yaw{};
  ClassLabel label = ClassLabel::Other;
  int difficulty = -1;  ///< 0 easy, 1 moderate, 2 hard, -1 unknown

  /// Planar distance of the box center from the sensor.
  S range() const { return std::hypot(cx, cy); }
  Eigen::Matrix<S, 2, 1> center2() const { return {cx, cy}; }
  Eigen::Matrix<S, 3, 1> center() const { return {cx, cy, cz}; }
};

using Box3d = Box3<double>;
using Box3f = Box3<float>;

/// Range-image geometry: `width` columns span the full azimuth circle,
/// `height` rows span the vertical field of view [fov_down, fov_up] (radians).
struct LidarSpec {
  int width = 2048;
  int height = 64;
  double fov_up = deg2rad(2.0);
  double fov_down = deg2rad(-24.8);

  double fov() const { return fov_up - fov_down; }
  bool valid() const { return width > 0 && height > 0 && fov_up > fov_down; }
  bool operator==(const LidarSpec&) const = default;
};

struct Pixel {
  int u = 0;  ///< column in [0, width)
  int v = 0;  ///< row in [0, height)
  bool operator==(const Pixel&) const = default;
};

}  // namespace caaug
