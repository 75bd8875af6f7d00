#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "caaug/errors.hpp"
#include "caaug/types.hpp"

namespace caaug {

/// KITTI calibration: rectification R0 and the velodyne-to-camera transform.
/// Projection matrices and any other rows are carried verbatim in `extra`.
struct Calib {
  Eigen::Matrix3d rect = Eigen::Matrix3d::Identity();
  Eigen::Matrix<double, 3, 4> velo_to_cam = Eigen::Matrix<double, 3, 4>::Identity();
  std::map<std::string, std::vector<double>> extra;

  /// 4x4 lidar -> rectified-camera transform.
  Eigen::Matrix4d lidar_to_cam() const {
    Eigen::Matrix4d rect4 = Eigen::Matrix4d::Identity();
    rect4.topLeftCorner<3, 3>() = rect;
    Eigen::Matrix4d tr4 = Eigen::Matrix4d::Identity();
    tr4.topRows<3>() = velo_to_cam;
    return rect4 * tr4;
  }
};

/// The usual camera-looks-along-lidar-x axis permutation; used for synthetic
/// frames so they run through the same label conversion as real data.
Calib synthetic_calib();

/// One line of a KITTI label file (15 whitespace-separated fields, plus an
/// optional score). `location` is the box bottom center in the rectified
/// camera frame.
struct KittiLabel {
  std::string type = "DontCare";
  double truncated = 0.0;
  int occluded = 0;
  double alpha = 0.0;
  Eigen::Vector4d bbox = Eigen::Vector4d::Zero();  // left, top, right, bottom
  double height = 0.0, width = 0.0, length = 0.0;  // meters
  Eigen::Vector3d location = Eigen::Vector3d::Zero();
  double rotation_y = 0.0;
  std::optional<double> score;
};

/// A fully loaded frame. `boxes` and `labels` are parallel: boxes[i] derives
/// from the non-DontCare labels[i]. DontCare lines are kept separately and
/// copied through untouched.
struct FrameBundle {
  std::string id;
  PointCloud cloud;
  std::vector<Box3d> boxes;
  std::vector<KittiLabel> labels;
  std::vector<KittiLabel> dont_care;
  Calib calib;
};

/// Velodyne binary: packed little-endian float32 (x, y, z, intensity).
/// Throws MalformedFile when the size is not a multiple of 16 bytes.
PointCloud read_velodyne(const std::filesystem::path& path);
void write_velodyne(const PointCloud& cloud, const std::filesystem::path& path);

std::vector<KittiLabel> read_labels(const std::filesystem::path& path);
void write_labels(std::span<const KittiLabel> labels, const std::filesystem::path& path);
std::string label_line(const KittiLabel& label);

Calib read_calib(const std::filesystem::path& path);

/// Maps a label into the lidar frame: bottom center through the inverse of
/// R0 * Tr, center lifted by height/2, yaw = -rotation_y - pi/2.
Box3d label_to_lidar_box(const KittiLabel& label, const Calib& calib);

/// Inverse of label_to_lidar_box. When `original` is given, its non-geometry
/// fields (type, truncated, occluded, alpha, bbox, score) carry over;
/// otherwise sentinels mark the geometry-only fields as unset.
KittiLabel box_to_label(const Box3d& box, const Calib& calib, const KittiLabel* original = nullptr);

/// KITTI difficulty from 2D box height / occlusion / truncation;
/// -1 when the label does not reach any tier.
int kitti_difficulty(const KittiLabel& label);

/// Reads velodyne/<id>.bin, label_2/<id>.txt and calib/<id>.txt under a
/// KITTI root directory.
FrameBundle read_frame(const std::filesystem::path& kitti_root, const std::string& id);

/// Frame ids present under <root>/velodyne, sorted.
std::vector<std::string> list_frames(const std::filesystem::path& kitti_root);

struct FramePaths {
  std::filesystem::path velodyne;
  std::filesystem::path label;
  std::filesystem::path manifest;
  std::filesystem::path stats;
};

/// Writes the bundle as velodyne/<id>.bin + label_2/<id>.txt under out_dir,
/// plus manifest/<id>.json and stats/<id>.txt when the strings are nonempty.
/// Every file lands via write-to-temp-then-rename.
FramePaths write_frame(const FrameBundle& bundle, const std::filesystem::path& out_dir,
                       const std::string& manifest_json = {}, const std::string& stats_text = {});

/// Self-describing JSON frame format used by synthetic data and tests; embeds
/// the range-image spec and optional provenance tags.
void write_native_frame(const FrameBundle& bundle, const LidarSpec& spec, const std::filesystem::path& path);
FrameBundle read_native_frame(const std::filesystem::path& path, LidarSpec* spec_out = nullptr);

}  // namespace caaug
