#include "caaug/kitti_io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace caaug {

namespace fs = std::filesystem;

namespace {

std::string slurp_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const fs::path& path, const void* data, std::size_t size) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    if (size > 0) out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
}

void write_file_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, text.data(), text.size());
}

std::string format_double(double v, int precision = 9) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

}  // namespace

Calib synthetic_calib() {
  Calib c;
  // camera x = -y_lidar, y = -z_lidar, z = x_lidar
  c.velo_to_cam << 0, -1, 0, 0,
                   0, 0, -1, 0,
                   1, 0, 0, 0;
  return c;
}

PointCloud read_velodyne(const fs::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open velodyne file: " + path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  if (size % 16 != 0)
    throw MalformedFile("velodyne file size " + std::to_string(size) + " is not a multiple of 16: " + path.string());
  in.seekg(0);
  std::vector<float> raw(size / 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(size));
  if (in.gcount() != static_cast<std::streamsize>(size)) throw IoError("short read: " + path.string());

  PointCloud cloud;
  const auto n = static_cast<Eigen::Index>(size / 16);
  cloud.data.resize(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t base = static_cast<std::size_t>(i) * 4;
    cloud.data(i, 0) = raw[base + 0];
    cloud.data(i, 1) = raw[base + 1];
    cloud.data(i, 2) = raw[base + 2];
    cloud.data(i, 3) = raw[base + 3];
  }
  return cloud;
}

void write_velodyne(const PointCloud& cloud, const fs::path& path) {
  std::vector<float> raw(static_cast<std::size_t>(cloud.size()) * 4);
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const std::size_t base = static_cast<std::size_t>(i) * 4;
    raw[base + 0] = static_cast<float>(cloud.data(i, 0));
    raw[base + 1] = static_cast<float>(cloud.data(i, 1));
    raw[base + 2] = static_cast<float>(cloud.data(i, 2));
    raw[base + 3] = static_cast<float>(cloud.data(i, 3));
  }
  write_file_atomic(path, raw.data(), raw.size() * 4);
}

std::vector<KittiLabel> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label file: " + path.string());
  std::vector<KittiLabel> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    KittiLabel l;
    double occluded = 0;
    ls >> l.type >> l.truncated >> occluded >> l.alpha >> l.bbox[0] >> l.bbox[1] >> l.bbox[2] >>
        l.bbox[3] >> l.height >> l.width >> l.length >> l.location.x() >> l.location.y() >>
        l.location.z() >> l.rotation_y;
    if (!ls) throw MalformedFile("bad label line in " + path.string() + ": " + line);
    l.occluded = static_cast<int>(occluded);
    double score;
    if (ls >> score) l.score = score;
    labels.push_back(std::move(l));
  }
  return labels;
}

std::string label_line(const KittiLabel& label) {
  std::ostringstream out;
  out << label.type << ' ' << format_double(label.truncated, 2) << ' ' << label.occluded << ' '
      << format_double(label.alpha) << ' ' << format_double(label.bbox[0]) << ' '
      << format_double(label.bbox[1]) << ' ' << format_double(label.bbox[2]) << ' '
      << format_double(label.bbox[3]) << ' ' << format_double(label.height) << ' '
      << format_double(label.width) << ' ' << format_double(label.length) << ' '
      << format_double(label.location.x()) << ' ' << format_double(label.location.y()) << ' '
      << format_double(label.location.z()) << ' ' << format_double(label.rotation_y);
  if (label.score) out << ' ' << format_double(*label.score);
  return out.str();
}

void write_labels(std::span<const KittiLabel> labels, const fs::path& path) {
  std::string text;
  for (const KittiLabel& l : labels) {
    text += label_line(l);
    text += '\n';
  }
  write_file_atomic(path, text);
}

Calib read_calib(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open calib file: " + path.string());
  Calib calib;
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = line.substr(0, colon);
    std::istringstream vs(line.substr(colon + 1));
    std::vector<double> values;
    double v;
    while (vs >> v) values.push_back(v);
    if (values.empty()) continue;
    if ((key == "R0_rect" || key == "R_rect") && values.size() == 9) {
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) calib.rect(r, c) = values[static_cast<std::size_t>(r * 3 + c)];
    } else if ((key == "Tr_velo_to_cam" || key == "Tr_velo_cam") && values.size() == 12) {
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) calib.velo_to_cam(r, c) = values[static_cast<std::size_t>(r * 4 + c)];
    } else {
      calib.extra[key] = std::move(values);
    }
  }
  if (!calib.rect.allFinite() || !calib.velo_to_cam.allFinite())
    throw MalformedFile("non-finite calibration: " + path.string());
  const Eigen::Matrix3d rot = calib.velo_to_cam.leftCols<3>();
  if (((rot.transpose() * rot) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-3)
    throw MalformedFile("velodyne-to-camera rotation is not orthonormal: " + path.string());
  return calib;
}

Box3d label_to_lidar_box(const KittiLabel& label, const Calib& calib) {
  const Eigen::Matrix4d m = calib.lidar_to_cam();
  const Eigen::FullPivLU<Eigen::Matrix4d> lu(m);
  if (!lu.isInvertible()) throw SingularCalib("calibration transform is not invertible");
  const Eigen::Vector4d bottom_cam(label.location.x(), label.location.y(), label.location.z(), 1.0);
  const Eigen::Vector4d bottom_lidar = lu.solve(bottom_cam);

  Box3d box;
  box.cx = bottom_lidar.x();
  box.cy = bottom_lidar.y();
  box.cz = bottom_lidar.z() + label.height / 2;  // bottom center -> volume center
  box.length = label.length;
  box.width = label.width;
  box.height = label.height;
  box.yaw = normalize_angle(-label.rotation_y - kPi / 2);
  box.label = class_from_name(label.type);
  box.difficulty = kitti_difficulty(label);
  return box;
}

KittiLabel box_to_label(const Box3d& box, const Calib& calib, const KittiLabel* original) {
  KittiLabel label;
  if (original) {
    label = *original;
  } else {
    // geometry-free fields unknown for inserted objects: sentinel values
    label.truncated = -1.0;
    label.occluded = -1;
    label.alpha = -10.0;
    label.bbox << -1, -1, -1, -1;
  }
  label.type = original ? original->type : class_name(box.label);
  const Eigen::Vector4d bottom_lidar(box.cx, box.cy, box.cz - box.height / 2, 1.0);
  const Eigen::Vector4d bottom_cam = calib.lidar_to_cam() * bottom_lidar;
  label.location = bottom_cam.head<3>();
  label.height = box.height;
  label.width = box.width;
  label.length = box.length;
  label.rotation_y = normalize_angle(-box.yaw - kPi / 2);
  return label;
}

int kitti_difficulty(const KittiLabel& label) {
  const double bbox_height = label.bbox[3] - label.bbox[1];
  if (bbox_height >= 40.0 && label.occluded <= 0 && label.truncated <= 0.15) return 0;
  if (bbox_height >= 25.0 && label.occluded <= 1 && label.truncated <= 0.30) return 1;
  if (bbox_height >= 25.0 && label.occluded <= 2 && label.truncated <= 0.50) return 2;
  return -1;
}

FrameBundle read_frame(const fs::path& kitti_root, const std::string& id) {
  FrameBundle frame;
  frame.id = id;
  frame.cloud = read_velodyne(kitti_root / "velodyne" / (id + ".bin"));
  frame.calib = read_calib(kitti_root / "calib" / (id + ".txt"));
  const auto labels = read_labels(kitti_root / "label_2" / (id + ".txt"));
  for (const KittiLabel& l : labels) {
    if (l.type == "DontCare") {
      frame.dont_care.push_back(l);
      continue;
    }
    frame.boxes.push_back(label_to_lidar_box(l, frame.calib));
    frame.labels.push_back(l);
  }
  return frame;
}

std::vector<std::string> list_frames(const fs::path& kitti_root) {
  std::vector<std::string> ids;
  const fs::path dir = kitti_root / "velodyne";
  if (!fs::is_directory(dir)) throw IoError("no velodyne directory under " + kitti_root.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".bin") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

FramePaths write_frame(const FrameBundle& bundle, const fs::path& out_dir,
                       const std::string& manifest_json, const std::string& stats_text) {
  fs::create_directories(out_dir / "velodyne");
  fs::create_directories(out_dir / "label_2");
  FramePaths paths;
  paths.velodyne = out_dir / "velodyne" / (bundle.id + ".bin");
  paths.label = out_dir / "label_2" / (bundle.id + ".txt");
  write_velodyne(bundle.cloud, paths.velodyne);

  std::vector<KittiLabel> lines = bundle.labels;
  lines.insert(lines.end(), bundle.dont_care.begin(), bundle.dont_care.end());
  write_labels(lines, paths.label);

  if (!manifest_json.empty()) {
    fs::create_directories(out_dir / "manifest");
    paths.manifest = out_dir / "manifest" / (bundle.id + ".json");
    write_file_atomic(paths.manifest, manifest_json);
  }
  if (!stats_text.empty()) {
    fs::create_directories(out_dir / "stats");
    paths.stats = out_dir / "stats" / (bundle.id + ".txt");
    write_file_atomic(paths.stats, stats_text);
  }
  return paths;
}

// --- native frame format ------------------------------------------------------

void write_native_frame(const FrameBundle& bundle, const LidarSpec& spec, const fs::path& path) {
  nlohmann::ordered_json j;
  j["format"] = "caaug-frame";
  j["version"] = 1;
  j["id"] = bundle.id;
  j["spec"] = {{"width", spec.width}, {"height", spec.height}, {"fov_up", spec.fov_up}, {"fov_down", spec.fov_down}};
  auto points = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < bundle.cloud.size(); ++i)
    points.push_back({bundle.cloud.data(i, 0), bundle.cloud.data(i, 1), bundle.cloud.data(i, 2), bundle.cloud.data(i, 3)});
  j["points"] = std::move(points);
  if (bundle.cloud.tagged()) {
    auto tags = nlohmann::ordered_json::array();
    for (const PointTag& t : bundle.cloud.tags)
      tags.push_back({static_cast<int>(t.kind), t.object_id});
    j["tags"] = std::move(tags);
  }
  auto boxes = nlohmann::ordered_json::array();
  for (const Box3d& b : bundle.boxes) {
    boxes.push_back({{"class", class_name(b.label)},
                     {"cx", b.cx},
                     {"cy", b.cy},
                     {"cz", b.cz},
                     {"length", b.length},
                     {"width", b.width},
                     {"height", b.height},
                     {"yaw", b.yaw},
                     {"difficulty", b.difficulty}});
  }
  j["boxes"] = std::move(boxes);
  write_file_atomic(path, j.dump(1));
}

FrameBundle read_native_frame(const fs::path& path, LidarSpec* spec_out) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(slurp_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw MalformedFile("cannot parse native frame " + path.string() + ": " + e.what());
  }
  try {
    if (j.value("format", "") != "caaug-frame" || j.value("version", 0) != 1)
      throw FormatVersionMismatch("not a version-1 native frame: " + path.string());
    FrameBundle frame;
    frame.id = j.value("id", "native");
    frame.calib = synthetic_calib();
    if (spec_out) {
      spec_out->width = j["spec"]["width"].get<int>();
      spec_out->height = j["spec"]["height"].get<int>();
      spec_out->fov_up = j["spec"]["fov_up"].get<double>();
      spec_out->fov_down = j["spec"]["fov_down"].get<double>();
    }
    const auto& points = j["points"];
    frame.cloud.data.resize(static_cast<Eigen::Index>(points.size()), 4);
    for (Eigen::Index i = 0; i < frame.cloud.data.rows(); ++i) {
      const auto& row = points[static_cast<std::size_t>(i)];
      for (int c = 0; c < 4; ++c) frame.cloud.data(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    if (j.contains("tags")) {
      for (const auto& t : j["tags"])
        frame.cloud.tags.push_back(PointTag{static_cast<Provenance>(t[0].get<int>()), t[1].get<std::int32_t>()});
      if (frame.cloud.tags.size() != static_cast<std::size_t>(frame.cloud.size()))
        throw MalformedFile("tag count mismatch in " + path.string());
    }
    for (const auto& b : j.value("boxes", nlohmann::json::array())) {
      Box3d box;
      box.cx = b["cx"].get<double>();
      box.cy = b["cy"].get<double>();
      box.cz = b["cz"].get<double>();
      box.length = b["length"].get<double>();
      box.width = b["width"].get<double>();
      box.height = b["height"].get<double>();
      box.yaw = b["yaw"].get<double>();
      box.label = class_from_name(b.value("class", "Other"));
      box.difficulty = b.value("difficulty", -1);
      frame.boxes.push_back(box);
      frame.labels.push_back(box_to_label(box, frame.calib, nullptr));
    }
    return frame;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedFile("bad native frame " + path.string() + ": " + e.what());
  }
}

}  // namespace caaug
