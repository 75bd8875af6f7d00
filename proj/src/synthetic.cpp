#include "caaug/synthetic.hpp"

#include <limits>

#include "caaug/geometry.hpp"

namespace caaug {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::Vector3d beam_direction(int u, int v, const LidarSpec& spec) {
  const double theta = kPi * (1.0 - 2.0 * (u + 0.5) / static_cast<double>(spec.width));
  const double phi = spec.fov_up - spec.fov() * (v + 0.5) / static_cast<double>(spec.height);
  return {std::cos(phi) * std::cos(theta), std::cos(phi) * std::sin(theta), std::sin(phi)};
}

/// Entry distance of the ray t * dir into an oriented box, or +inf.
double ray_box_entry(const Eigen::Vector3d& dir, const Box3d& box) {
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  // ray in the box frame
  const double ox = c * (-box.cx) + s * (-box.cy);
  const double oy = -s * (-box.cx) + c * (-box.cy);
  const double oz = -box.cz;
  const double dx = c * dir.x() + s * dir.y();
  const double dy = -s * dir.x() + c * dir.y();
  const double dz = dir.z();

  const double half[3] = {box.length / 2, box.width / 2, box.height / 2};
  const double o[3] = {ox, oy, oz};
  const double d[3] = {dx, dy, dz};
  double t_enter = 0.0;
  double t_exit = kInf;
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (std::abs(o[a]) > half[a]) return kInf;
      continue;
    }
    double t0 = (-half[a] - o[a]) / d[a];
    double t1 = (half[a] - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
  }
  if (t_exit < t_enter || t_exit <= 0.0) return kInf;
  if (t_enter <= 0.0) return kInf;  // rays starting inside a box return nothing
  return t_enter + 1e-6;            // a hair past the face so box extraction keeps surface returns
}

}  // namespace

FrameBundle generate_synthetic_scene(const SceneDescriptor& d, Rng& rng) {
  const LidarSpec& spec = d.spec;
  std::vector<Eigen::Vector4d> points;
  std::vector<PointTag> tags;
  points.reserve(static_cast<std::size_t>(spec.width) * spec.height / 2);

  for (int v = 0; v < spec.height; ++v) {
    for (int u = 0; u < spec.width; ++u) {
      const Eigen::Vector3d dir = beam_direction(u, v, spec);

      double best_t = kInf;
      enum class Hit { None, Ground, Wall, Box } hit = Hit::None;

      if (dir.z() < 0.0) {
        const double t = d.ground_z / dir.z();
        const double planar = t * std::hypot(dir.x(), dir.y());
        if (planar <= d.ground_range && t < best_t) {
          best_t = t;
          hit = Hit::Ground;
        }
      }
      for (const WallSpec& w : d.walls) {
        if (u < w.col_begin || u > w.col_end) continue;
        const double z = w.range * dir.z();
        if (z < d.ground_z || z > d.ground_z + w.height) continue;
        if (w.range < best_t) {
          best_t = w.range;
          hit = Hit::Wall;
        }
      }
      if (d.cast_box_points) {
        for (const Box3d& box : d.boxes) {
          const double t = ray_box_entry(dir, box);
          if (t < best_t) {
            best_t = t;
            hit = Hit::Box;
          }
        }
      }
      if (hit == Hit::None) continue;

      Eigen::Vector4d p;
      p.head<3>() = best_t * dir;
      switch (hit) {
        case Hit::Ground:
          if (d.ground_noise > 0.0) p.z() += rng.uniform(-d.ground_noise, d.ground_noise);
          p[3] = 0.3;
          tags.push_back(PointTag{Provenance::Ground, -1});
          break;
        case Hit::Wall:
          p[3] = 0.6;
          tags.push_back(PointTag{Provenance::Obstacle, -1});
          break;
        default:
          p[3] = 0.8;
          tags.push_back(PointTag{Provenance::Obstacle, -1});
          break;
      }
      points.push_back(p);
    }
  }

  FrameBundle frame;
  frame.id = "synthetic";
  frame.calib = synthetic_calib();
  frame.cloud.data.resize(static_cast<Eigen::Index>(points.size()), 4);
  for (Eigen::Index i = 0; i < frame.cloud.data.rows(); ++i)
    frame.cloud.data.row(i) = points[static_cast<std::size_t>(i)].transpose();
  frame.cloud.tags = std::move(tags);
  frame.boxes = d.boxes;
  for (const Box3d& box : d.boxes) frame.labels.push_back(box_to_label(box, frame.calib, nullptr));
  return frame;
}

}  // namespace caaug
