// caaug command line: context-aware ground-truth augmentation over KITTI data.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "caaug/config.hpp"
#include "caaug/pipeline.hpp"
#include "caaug/render.hpp"
#include "caaug/synthetic.hpp"

namespace fs = std::filesystem;
using namespace caaug;

namespace {

std::vector<std::string> split_frames(const std::string& list) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : list) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string default_kitti_root() {
  const char* env = std::getenv("CAAUG_KITTI_ROOT");
  return env ? env : "";
}

AugConfig load_effective_config(const std::string& config_path, const std::string& strategy,
                                std::optional<std::uint64_t> seed) {
  AugConfig cfg;
  if (!config_path.empty()) cfg = load_config(config_path);
  if (!strategy.empty()) cfg.strategy = strategy_from_name(strategy);
  if (seed) cfg.seed = *seed;
  return cfg;
}

int cmd_build_db(const std::string& root_arg, const std::string& out, const std::string& config_path,
                 const std::string& frames_arg) {
  const std::string root = root_arg.empty() ? default_kitti_root() : root_arg;
  if (root.empty()) {
    std::cerr << "no KITTI root given and CAAUG_KITTI_ROOT is unset\n";
    return 2;
  }
  AugConfig cfg;
  if (!config_path.empty()) cfg = load_config(config_path);

  const std::vector<std::string> ids =
      frames_arg.empty() ? list_frames(root) : split_frames(frames_arg);
  std::vector<FrameBundle> frames;
  frames.reserve(ids.size());
  for (const std::string& id : ids) frames.push_back(read_frame(root, id));

  BuildStats stats;
  const GtDatabase db = build_database(frames, cfg.spec, &stats);
  save_database(db, out);
  std::cout << "frames " << frames.size() << "\n";
  std::cout << "objects " << stats.objects << "\n";
  std::cout << "skipped_empty " << stats.skipped_empty << "\n";
  std::cout << "skipped_wide " << stats.skipped_wide << "\n";
  std::cout << "other_class " << stats.other_class << "\n";
  for (int c = 0; c < 3; ++c) {
    const auto cls = static_cast<ClassLabel>(c);
    std::cout << class_name(cls) << " " << db.objects(cls).size() << "\n";
  }
  std::cout << "database " << out << "\n";
  return 0;
}

int cmd_augment(const std::string& root_arg, const std::string& db_path, const std::string& out_dir,
                const std::string& config_path, const std::string& strategy,
                std::optional<std::uint64_t> seed, const std::string& frames_arg, int workers) {
  const std::string root = root_arg.empty() ? default_kitti_root() : root_arg;
  if (root.empty()) {
    std::cerr << "no KITTI root given and CAAUG_KITTI_ROOT is unset\n";
    return 2;
  }
  AugConfig cfg = load_effective_config(config_path, strategy, seed);
  GtDatabase db = load_database(db_path);
  if (!(db.spec == cfg.spec)) {
    const long dropped = db.rebin(cfg.spec);
    std::cerr << "database spec differs from the run spec; recomputed rangebins (" << dropped
              << " objects dropped)\n";
  }
  BatchOptions options;
  options.frames = frames_arg.empty() ? std::vector<std::string>{} : split_frames(frames_arg);
  options.workers = workers;
  options.database_path = db_path;
  const BatchResult result = run_batch(root, db, cfg, out_dir, options);
  std::cout << "frames_done " << result.frames_done << "\n";
  for (const auto& [id, message] : result.failures)
    std::cerr << "frame " << id << " failed: " << message << "\n";
  return result.failures.empty() ? 0 : 1;
}

int cmd_stats(const std::string& out_dir) {
  std::cout << aggregate_stats(out_dir);
  return 0;
}

int cmd_render(const std::string& frame_path, const std::string& out_path, int width, int height,
               double fov_up_deg, double fov_down_deg) {
  const fs::path in = frame_path;
  LidarSpec spec{.width = width, .height = height, .fov_up = deg2rad(fov_up_deg), .fov_down = deg2rad(fov_down_deg)};
  PointCloud cloud;
  if (in.extension() == ".json") {
    LidarSpec embedded;
    const FrameBundle frame = read_native_frame(in, &embedded);
    spec = embedded;
    cloud = frame.cloud;
  } else {
    cloud = read_velodyne(in);
  }
  write_range_ppm(cloud, spec, out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_validate(const std::string& out_dir) {
  const std::vector<Violation> violations = validate_output(out_dir);
  if (violations.empty()) {
    std::cout << "ok\n";
    return 0;
  }
  for (const Violation& v : violations)
    std::cerr << "frame " << v.frame_id << " violates " << v.invariant << ": " << v.detail << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"context-aware ground-truth augmentation for lidar point clouds"};
  app.require_subcommand(1);

  // build-db
  auto* build = app.add_subcommand("build-db", "build a ground-truth object database from a KITTI tree");
  std::string build_root, build_out, build_config, build_frames;
  build->add_option("kitti_root", build_root, "KITTI directory (velodyne/, label_2/, calib/)");
  build->add_option("out", build_out, "output database file")->required();
  build->add_option("--config", build_config, "config file (for the lidar spec)");
  build->add_option("--frames", build_frames, "comma-separated frame ids (default: all)");

  // augment
  auto* augment = app.add_subcommand("augment", "augment frames into an output tree");
  std::string aug_root, aug_db, aug_out, aug_config, aug_strategy, aug_frames;
  std::uint64_t aug_seed = 0;
  bool aug_seed_set = false;
  int aug_workers = 1;
  augment->add_option("kitti_root", aug_root, "KITTI directory");
  augment->add_option("db", aug_db, "ground-truth database")->required();
  augment->add_option("out_dir", aug_out, "output directory")->required();
  augment->add_option("--config", aug_config, "config file");
  augment->add_option("--seed", aug_seed, "master seed")->each([&](const std::string&) { aug_seed_set = true; });
  augment->add_option("--strategy", aug_strategy, "naive|culling|drilling|none");
  augment->add_option("--frames", aug_frames, "comma-separated frame ids (default: all)");
  augment->add_option("--workers", aug_workers, "worker threads (default 1)");

  // stats
  auto* stats = app.add_subcommand("stats", "aggregate per-frame statistics of an output tree");
  std::string stats_dir;
  stats->add_option("out_dir", stats_dir, "augmented output directory")->required();

  // render
  auto* render = app.add_subcommand("render", "render a frame's range image as a PPM");
  std::string render_frame, render_out;
  int render_w = 2048, render_h = 64;
  double render_up = 2.0, render_down = -24.8;
  render->add_option("frame", render_frame, "velodyne .bin or native .json frame")->required();
  render->add_option("out", render_out, "output .ppm path")->required();
  render->add_option("--width", render_w, "image width (ignored for native frames)");
  render->add_option("--height", render_h, "image height");
  render->add_option("--fov-up-deg", render_up, "vertical fov upper bound");
  render->add_option("--fov-down-deg", render_down, "vertical fov lower bound");

  // validate
  auto* validate = app.add_subcommand("validate", "re-check every invariant of an output tree");
  std::string validate_dir;
  validate->add_option("out_dir", validate_dir, "augmented output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage problems exit 2
  }

  try {
    if (build->parsed()) return cmd_build_db(build_root, build_out, build_config, build_frames);
    if (augment->parsed())
      return cmd_augment(aug_root, aug_db, aug_out, aug_config, aug_strategy,
                         aug_seed_set ? std::optional<std::uint64_t>(aug_seed) : std::nullopt,
                         aug_frames, aug_workers);
    if (stats->parsed()) return cmd_stats(stats_dir);
    if (render->parsed())
      return cmd_render(render_frame, render_out, render_w, render_h, render_up, render_down);
    if (validate->parsed()) return cmd_validate(validate_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
