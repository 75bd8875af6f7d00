#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "caaug/pipeline.hpp"
#include "caaug/synthetic.hpp"
#include "oracles.hpp"

using namespace caaug;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* name) {
  auto dir = fs::temp_directory_path() / "caaug_pipe_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

/// Staging scenes with parked cars in the open; used to build databases.
GtDatabase make_db(const LidarSpec& spec, int n_frames = 3) {
  std::vector<FrameBundle> frames;
  for (int f = 0; f < n_frames; ++f) {
    SceneDescriptor d;
    d.spec = spec;
    d.ground_range = 35.0;
    for (int b = 0; b < 3; ++b) {
      const double angle = 0.25 * (b - 1) + 0.1 * f;
      const double range = 11.0 + 2.0 * b + f;
      d.boxes.push_back(Box3d{.cx = range * std::cos(angle), .cy = range * std::sin(angle),
                              .cz = -1.0, .length = 4.0, .width = 1.8, .height = 1.5,
                              .yaw = 0.3 * b, .label = ClassLabel::Car});
    }
    Rng rng(100 + static_cast<std::uint64_t>(f));
    FrameBundle frame = generate_synthetic_scene(d, rng);
    frame.id = "staging_" + std::to_string(f);
    frames.push_back(std::move(frame));
  }
  return build_database(frames, spec, nullptr);
}

FrameBundle open_scene(const LidarSpec& spec, std::uint64_t seed) {
  SceneDescriptor d;
  d.spec = spec;
  d.ground_range = 30.0;
  d.ground_noise = 0.03;
  Rng rng(seed);
  FrameBundle frame = generate_synthetic_scene(d, rng);
  frame.id = "000001";
  return frame;
}

}  // namespace

TEST_CASE("augment_frame: empty database is an exact no-op on the cloud") {
  const LidarSpec spec;
  GtDatabase db;
  db.spec = spec;
  AugConfig cfg;
  cfg.spec = spec;
  cfg.global.enabled = false;
  const FrameBundle in = open_scene(spec, 5);
  const AugmentResult res = augment_frame(in, db, cfg, 77);
  CHECK(res.stats.candidates == 0);
  CHECK(res.stats.accepted == 0);
  REQUIRE(res.bundle.cloud.size() == in.cloud.size());
  CHECK((res.bundle.cloud.data.array() == in.cloud.data.array()).all());
  CHECK_FALSE(res.bundle.cloud.tagged());  // provenance stripped
  CHECK(res.bundle.boxes.size() == in.boxes.size());
}

TEST_CASE("augment_frame: deterministic, labels track acceptances minus culls") {
  const LidarSpec spec;
  const GtDatabase db = make_db(spec);
  AugConfig cfg;
  cfg.spec = spec;
  cfg.samples = SampleCounts{6, 0, 0};
  cfg.seed = 4;
  const FrameBundle in = open_scene(spec, 6);

  const AugmentResult a = augment_frame(in, db, cfg, frame_seed(cfg.seed, in.id));
  const AugmentResult b = augment_frame(in, db, cfg, frame_seed(cfg.seed, in.id));
  CHECK(a.manifest.to_json() == b.manifest.to_json());
  REQUIRE(a.bundle.cloud.size() == b.bundle.cloud.size());
  CHECK((a.bundle.cloud.data.array() == b.bundle.cloud.data.array()).all());

  CHECK(a.stats.candidates == 6);
  CHECK(a.stats.accepted + a.stats.rejected_no_feasible + a.stats.rejected_all_collide == 6);
  long culled = 0;
  for (const auto& ins : a.manifest.insertions)
    if (ins.culled) ++culled;
  CHECK(a.bundle.boxes.size() == in.boxes.size() + a.stats.accepted - culled);
  CHECK(a.bundle.labels.size() == a.bundle.boxes.size());
}

TEST_CASE("augment_frame: mismatched database spec is rejected") {
  const LidarSpec spec;
  GtDatabase db = make_db(spec);
  AugConfig cfg;
  cfg.spec = spec;
  cfg.spec.width = spec.width * 2;
  const FrameBundle in = open_scene(spec, 6);
  CHECK_THROWS_AS((void)augment_frame(in, db, cfg, 1), SpecMismatch);
}

TEST_CASE("apply_global_transform: rotation composes to identity, flip flips") {
  const LidarSpec spec;
  FrameBundle frame = open_scene(spec, 8);
  PointCloud cloud = frame.cloud;
  std::vector<Box3d> boxes{Box3d{.cx = 5, .cy = 2, .cz = 0, .length = 4, .width = 2, .height = 1.5, .yaw = 0.4}};

  std::vector<Box3d> boxes2 = boxes;
  PointCloud cloud2 = cloud;
  apply_global_transform(cloud2, boxes2, GlobalApplied{.flipped = false, .rotation = 0.7, .scale = 1.0});
  apply_global_transform(cloud2, boxes2, GlobalApplied{.flipped = false, .rotation = -0.7, .scale = 1.0});
  CHECK((cloud2.data - cloud.data).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(boxes2[0].cx == doctest::Approx(boxes[0].cx));
  CHECK(boxes2[0].yaw == doctest::Approx(boxes[0].yaw));

  PointCloud cloud3 = cloud;
  std::vector<Box3d> boxes3 = boxes;
  apply_global_transform(cloud3, boxes3, GlobalApplied{.flipped = true, .rotation = 0.0, .scale = 1.0});
  CHECK(cloud3.data(0, 1) == doctest::Approx(-cloud.data(0, 1)));
  CHECK(boxes3[0].cy == doctest::Approx(-boxes[0].cy));
  CHECK(boxes3[0].yaw == doctest::Approx(-boxes[0].yaw));

  PointCloud cloud4 = cloud;
  std::vector<Box3d> boxes4 = boxes;
  apply_global_transform(cloud4, boxes4, GlobalApplied{.flipped = false, .rotation = 0.0, .scale = 1.1});
  CHECK(cloud4.data(0, 0) == doctest::Approx(1.1 * cloud.data(0, 0)));
  CHECK(boxes4[0].length == doctest::Approx(4.4));
}

TEST_CASE("augment_frame: wall scenes retain more object points with rotation on") {
  const LidarSpec spec;
  // objects parked straight ahead during staging
  std::vector<FrameBundle> staging;
  {
    SceneDescriptor d;
    d.spec = spec;
    d.ground_range = 35.0;
    for (int b = 0; b < 4; ++b) {
      const double angle = 0.12 * (b - 1.5);
      const double range = 12.0 + 1.5 * b;
      d.boxes.push_back(Box3d{.cx = range * std::cos(angle), .cy = range * std::sin(angle),
                              .cz = -1.0, .length = 4.0, .width = 1.8, .height = 1.5,
                              .yaw = 0.2 * b, .label = ClassLabel::Car});
    }
    Rng rng(55);
    FrameBundle frame = generate_synthetic_scene(d, rng);
    frame.id = "staging";
    staging.push_back(std::move(frame));
  }
  const GtDatabase db = build_database(staging, spec, nullptr);
  REQUIRE(db.total() == 4);

  // test scene: a frontal wall shadows the staging azimuths at close range
  SceneDescriptor wall_scene;
  wall_scene.spec = spec;
  wall_scene.ground_range = 30.0;
  wall_scene.walls.push_back(WallSpec{.col_begin = 800, .col_end = 1250, .range = 4.0, .height = 2.5});

  AugConfig cfg;
  cfg.spec = spec;
  cfg.samples = SampleCounts{4, 0, 0};
  cfg.strategy = Strategy::Culling;
  cfg.global.enabled = false;

  double mean_on = 0, mean_off = 0;
  int pairs = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(1000 + seed);
    FrameBundle frame = generate_synthetic_scene(wall_scene, rng);
    frame.id = "w" + std::to_string(seed);

    AugConfig on = cfg;
    AugConfig off = cfg;
    off.placement.rotate = false;
    const AugmentResult res_on = augment_frame(frame, db, on, frame_seed(1, frame.id));
    const AugmentResult res_off = augment_frame(frame, db, off, frame_seed(1, frame.id));

    auto mean_fraction = [](const AugmentResult& r) {
      double sum = 0;
      for (const auto& o : r.stats.occlusion.objects) sum += o.fraction;
      return r.stats.occlusion.objects.empty() ? 0.0
                                               : sum / static_cast<double>(r.stats.occlusion.objects.size());
    };
    mean_on += mean_fraction(res_on);
    mean_off += mean_fraction(res_off);
    ++pairs;
  }
  CHECK(pairs == 5);
  CHECK(mean_on / pairs > mean_off / pairs);
}

TEST_CASE("run_batch + validate: round trip, worker independence, fault injection") {
  const LidarSpec spec;
  const GtDatabase db = make_db(spec);

  // lay out a miniature KITTI root of synthetic frames
  const fs::path root = fresh_dir("kitti_root");
  fs::create_directories(root / "velodyne");
  fs::create_directories(root / "label_2");
  fs::create_directories(root / "calib");
  for (int f = 0; f < 4; ++f) {
    SceneDescriptor d;
    d.spec = spec;
    d.ground_range = 25.0;
    d.walls.push_back(WallSpec{.col_begin = 300 + 40 * f, .col_end = 420 + 40 * f, .range = 5.0, .height = 2.0});
    Rng rng(200 + static_cast<std::uint64_t>(f));
    FrameBundle frame = generate_synthetic_scene(d, rng);
    char id[8];
    std::snprintf(id, sizeof id, "%06d", f);
    frame.id = id;
    write_velodyne(frame.cloud, root / "velodyne" / (frame.id + ".bin"));
    std::vector<KittiLabel> lines;
    for (std::size_t i = 0; i < frame.boxes.size(); ++i) lines.push_back(box_to_label(frame.boxes[i], frame.calib, nullptr));
    write_labels(lines, root / "label_2" / (frame.id + ".txt"));
    std::ofstream calib(root / "calib" / (frame.id + ".txt"));
    calib << "R0_rect: 1 0 0 0 1 0 0 0 1\n";
    calib << "Tr_velo_to_cam: 0 -1 0 0 0 0 -1 0 1 0 0 0\n";
  }

  AugConfig cfg;
  cfg.spec = spec;
  cfg.samples = SampleCounts{4, 1, 0};
  cfg.seed = 31;
  cfg.global.enabled = true;

  const fs::path db_path = root / "db.bin";
  save_database(db, db_path);

  const fs::path out1 = fresh_dir("out_w1");
  const fs::path out2 = fresh_dir("out_w2");
  BatchOptions opt1;
  opt1.workers = 1;
  opt1.database_path = db_path.string();
  BatchOptions opt2 = opt1;
  opt2.workers = 3;
  const BatchResult r1 = run_batch(root, db, cfg, out1, opt1);
  const BatchResult r2 = run_batch(root, db, cfg, out2, opt2);
  CHECK(r1.failures.empty());
  CHECK(r2.failures.empty());
  CHECK(r1.frames_done == 4);

  for (int f = 0; f < 4; ++f) {
    char id[8];
    std::snprintf(id, sizeof id, "%06d", f);
    for (const char* sub : {"velodyne/", "label_2/", "manifest/"}) {
      const std::string ext = sub == std::string("velodyne/") ? ".bin"
                              : sub == std::string("label_2/") ? ".txt"
                                                               : ".json";
      CHECK(slurp(out1 / (sub + std::string(id) + ext)) == slurp(out2 / (sub + std::string(id) + ext)));
    }
  }

  // untouched output validates clean
  const auto violations = validate_output(out1);
  for (const auto& v : violations) {
    CAPTURE(v.frame_id);
    CAPTURE(v.invariant);
    CAPTURE(v.detail);
    CHECK(false);
  }
  CHECK(violations.empty());

  // stats aggregation sees every frame
  const std::string summary = aggregate_stats(out1);
  CHECK(summary.find("frames 4") != std::string::npos);

  // corrupt one manifest box position: range preservation must fire
  {
    const fs::path mpath = out2 / "manifest" / "000001.json";
    Manifest m = Manifest::from_json(slurp(mpath));
    if (!m.insertions.empty()) {
      m.insertions[0].box.cx += 1.5;
      std::ofstream out(mpath);
      out << m.to_json();
      const auto bad = validate_output(out2);
      bool named = false;
      for (const auto& v : bad)
        if (v.invariant == "range-preservation") named = true;
      CHECK(named);
    }
  }

  // corrupt a label file: replay comparison must fire
  {
    const fs::path lpath = out1 / "label_2" / "000002.txt";
    std::string text = slurp(lpath);
    text[text.find_last_of('.') - 1] += 1;  // nudge one digit
    std::ofstream out(lpath);
    out << text;
    const auto bad = validate_output(out1);
    bool named = false;
    for (const auto& v : bad)
      if (v.invariant == "replay-mismatch" && v.frame_id == "000002") named = true;
    CHECK(named);
  }
}

TEST_CASE("frame_seed: numeric and named ids, worker-count independence") {
  CHECK(frame_seed(1, "000123") == frame_seed(1, "000123"));
  CHECK(frame_seed(1, "000123") != frame_seed(1, "000124"));
  CHECK(frame_seed(1, "000123") != frame_seed(2, "000123"));
  CHECK(frame_seed(3, "synthetic_a") != frame_seed(3, "synthetic_b"));
}

TEST_CASE("stats text round trip") {
  FrameStats stats;
  stats.frame_id = "000009";
  stats.candidates = 5;
  stats.accepted = 3;
  stats.rejected_no_feasible = 1;
  stats.rejected_all_collide = 1;
  stats.rates = {{0, 0.93}, {2, 0.85}, {4, 1.0}};
  stats.occlusion.strategy = Strategy::Culling;
  stats.occlusion.objects.push_back(ObjectOcclusion{0, 120, 100, 100.0 / 120.0, false});
  stats.occlusion.objects.push_back(ObjectOcclusion{1, 40, 2, 0.05, true});
  stats.occlusion.dropped_objects.push_back(1);
  stats.timings.total_ms = 12.5;

  const std::string text = stats.to_text();
  const FrameStats back = FrameStats::from_text(text);
  CHECK(back.frame_id == stats.frame_id);
  CHECK(back.candidates == 5);
  CHECK(back.accepted == 3);
  CHECK(back.rejected_no_feasible == 1);
  REQUIRE(back.rates.size() == 3);
  CHECK(back.rates[1].first == 2);
  CHECK(back.rates[1].second == doctest::Approx(0.85));
  REQUIRE(back.occlusion.objects.size() == 2);
  CHECK(back.occlusion.objects[1].dropped);
  CHECK(back.occlusion.objects[0].retained == 100);
}
