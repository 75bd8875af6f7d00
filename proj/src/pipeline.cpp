#include "caaug/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "caaug/placement.hpp"
#include "caaug/scene_partition.hpp"

namespace caaug {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

double ms_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string fmt_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

/// Feasibility rate of one rangebin at one start column.
double rate_at_column(const Validspace& v, const Eigen::ArrayXi& rangebin, double far_edge, int start,
                      FeasibilityRule rule) {
  const auto w = static_cast<int>(v.size());
  double acc = 0;
  for (Eigen::Index t = 0; t < rangebin.size(); ++t) {
    const bool open = rule == FeasibilityRule::Unoccluded ? v[(start + t) % w] > far_edge
                                                          : v[(start + t) % w] < far_edge;
    if (open) acc += rangebin[t];
  }
  return acc / static_cast<double>(rangebin.sum());
}

}  // namespace

std::uint64_t frame_seed(std::uint64_t master, const std::string& frame_id) {
  const bool numeric = !frame_id.empty() &&
                       std::all_of(frame_id.begin(), frame_id.end(), [](char c) { return c >= '0' && c <= '9'; });
  const std::uint64_t stream = numeric ? std::stoull(frame_id) : hash_name(frame_id);
  return derive_seed(master, stream);
}

void apply_global_transform(PointCloud& cloud, std::vector<Box3d>& boxes, const GlobalApplied& g) {
  if (g.flipped) {
    cloud.data.col(1) = -cloud.data.col(1);
    for (Box3d& b : boxes) {
      b.cy = -b.cy;
      b.yaw = normalize_angle(-b.yaw);
    }
  }
  if (g.rotation != 0.0) {
    rotate_z_inplace(cloud.data, g.rotation);
    for (Box3d& b : boxes) b = rotate_z(b, g.rotation);
  }
  if (g.scale != 1.0) {
    cloud.data.leftCols<3>() *= g.scale;
    for (Box3d& b : boxes) {
      b.cx *= g.scale;
      b.cy *= g.scale;
      b.cz *= g.scale;
      b.length *= g.scale;
      b.width *= g.scale;
      b.height *= g.scale;
    }
  }
}

AugmentResult augment_frame(const FrameBundle& in, const GtDatabase& db, const AugConfig& cfg,
                            std::uint64_t seed) {
  if (!(db.spec == cfg.spec))
    throw SpecMismatch("database spec differs from the run spec; rebin the database first");

  const auto t_start = std::chrono::steady_clock::now();
  AugmentResult res;
  res.stats.frame_id = in.id;
  res.manifest.frame_id = in.id;
  res.manifest.master_seed = cfg.seed;
  res.manifest.frame_seed = seed;
  res.manifest.strategy = cfg.strategy;
  res.manifest.config_text = serialize_config(cfg);

  Rng rng(seed);

  auto t0 = std::chrono::steady_clock::now();
  const Partition part = partition_scene(in.cloud, cfg.pillar_d, cfg.pillar_sigma);
  res.stats.timings.partition_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  const Validspace vspace = compute_validspace(in.cloud, part, cfg.spec);
  res.stats.timings.validspace_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  const std::vector<GtRef> refs = sample_objects(db, cfg.samples, rng);
  std::vector<const GtObject*> candidates;
  candidates.reserve(refs.size());
  for (const GtRef& ref : refs) candidates.push_back(&get(db, ref));
  res.stats.timings.sampling_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  const PlacementResult placed =
      location_check(vspace, cfg.spec, candidates, in.boxes, cfg.placement, rng);
  res.stats.timings.placement_ms = ms_since(t0);

  // merge: scene points tagged by the partition, objects by acceptance order
  t0 = std::chrono::steady_clock::now();
  PointCloud merged = in.cloud;
  merged.tags.assign(static_cast<std::size_t>(merged.size()), PointTag{Provenance::Ground, -1});
  for (const Eigen::Index i : part.obstacle) merged.tags[static_cast<std::size_t>(i)].kind = Provenance::Obstacle;
  for (std::size_t k = 0; k < placed.accepted.size(); ++k) {
    PointCloud pts = placed.accepted[k].points;
    pts.tags.assign(static_cast<std::size_t>(pts.size()),
                    PointTag{Provenance::Inserted, static_cast<std::int32_t>(k)});
    merged.append(pts);
  }
  auto [resolved, report] =
      resolve(merged, cfg.spec, cfg.strategy, cfg.culling_min_points, cfg.culling_min_fraction);
  res.stats.timings.occlusion_ms = ms_since(t0);
  res.occluded = resolved;

  const std::set<int> dropped(report.dropped_objects.begin(), report.dropped_objects.end());

  // output boxes: the scene's, then surviving insertions
  std::vector<Box3d> out_boxes = in.boxes;
  std::vector<int> box_source;  // index into in.labels, or -1 for inserted
  for (std::size_t i = 0; i < in.boxes.size(); ++i) box_source.push_back(static_cast<int>(i));
  for (std::size_t k = 0; k < placed.accepted.size(); ++k) {
    if (dropped.count(static_cast<int>(k))) continue;
    out_boxes.push_back(placed.accepted[k].box);
    box_source.push_back(-1);
  }

  t0 = std::chrono::steady_clock::now();
  GlobalApplied g;
  if (cfg.global.enabled) {
    g.flipped = rng.bernoulli(cfg.global.flip_prob);
    g.rotation = rng.uniform(-cfg.global.rotation_range, cfg.global.rotation_range);
    g.scale = rng.uniform(cfg.global.scale_min, cfg.global.scale_max);
  }
  PointCloud final_cloud = std::move(resolved);
  apply_global_transform(final_cloud, out_boxes, g);
  res.stats.timings.global_ms = ms_since(t0);
  res.manifest.global = g;

  // labels regenerated from the final boxes; scene labels keep their metadata
  std::vector<KittiLabel> out_labels;
  out_labels.reserve(out_boxes.size());
  for (std::size_t i = 0; i < out_boxes.size(); ++i) {
    const KittiLabel* original =
        box_source[i] >= 0 ? &in.labels[static_cast<std::size_t>(box_source[i])] : nullptr;
    out_labels.push_back(box_to_label(out_boxes[i], in.calib, original));
  }

  final_cloud.tags.clear();
  res.bundle.id = in.id;
  res.bundle.cloud = std::move(final_cloud);
  res.bundle.boxes = std::move(out_boxes);
  res.bundle.labels = std::move(out_labels);
  res.bundle.dont_care = in.dont_care;
  res.bundle.calib = in.calib;

  // stats + manifest
  res.stats.candidates = static_cast<int>(refs.size());
  res.stats.accepted = static_cast<int>(placed.accepted.size());
  for (const RejectedPlacement& rej : placed.rejected) {
    if (rej.reason == RejectReason::NoFeasibleColumn) {
      ++res.stats.rejected_no_feasible;
    } else {
      ++res.stats.rejected_all_collide;
    }
  }
  for (const AcceptedPlacement& acc : placed.accepted) res.stats.rates.emplace_back(acc.candidate, acc.rate);
  for (const RejectedPlacement& rej : placed.rejected) res.stats.rates.emplace_back(rej.candidate, rej.best_rate);
  std::sort(res.stats.rates.begin(), res.stats.rates.end());
  res.stats.occlusion = report;

  for (std::size_t k = 0; k < placed.accepted.size(); ++k) {
    const AcceptedPlacement& acc = placed.accepted[k];
    const GtRef& ref = refs[static_cast<std::size_t>(acc.candidate)];
    const GtObject& src = get(db, ref);
    InsertionRecord rec;
    rec.object_id = static_cast<int>(k);
    rec.cls = ref.cls;
    rec.db_index = ref.index;
    rec.source_frame = src.source_frame;
    rec.dtheta = acc.dtheta;
    rec.start_col_from = src.start_col;
    rec.start_col_to = acc.target_col;
    rec.rate = acc.rate;
    rec.n_points = src.point_count();
    rec.culled = dropped.count(static_cast<int>(k)) > 0;
    rec.box = acc.box;
    res.manifest.insertions.push_back(std::move(rec));
  }
  for (const RejectedPlacement& rej : placed.rejected) {
    const GtRef& ref = refs[static_cast<std::size_t>(rej.candidate)];
    res.manifest.rejections.push_back(RejectionRecord{rej.candidate, ref.cls, ref.index,
                                                      reject_reason_name(rej.reason), rej.best_rate});
  }

  res.stats.timings.total_ms = ms_since(t_start);
  return res;
}

// --- stats text ----------------------------------------------------------------

std::string FrameStats::to_text() const {
  std::ostringstream out;
  out << "frame " << frame_id << "\n";
  out << "candidates " << candidates << "\n";
  out << "accepted " << accepted << "\n";
  out << "rejected_no_feasible " << rejected_no_feasible << "\n";
  out << "rejected_all_collide " << rejected_all_collide << "\n";
  for (const auto& [cand, rate] : rates) out << "rate " << cand << " " << fmt_rate(rate) << "\n";
  out << occlusion.to_text();
  char line[96];
  const std::pair<const char*, double> stages[] = {
      {"partition", timings.partition_ms}, {"validspace", timings.validspace_ms},
      {"sampling", timings.sampling_ms},   {"placement", timings.placement_ms},
      {"occlusion", timings.occlusion_ms}, {"global", timings.global_ms},
      {"total", timings.total_ms}};
  for (const auto& [name, v] : stages) {
    std::snprintf(line, sizeof line, "timing %s %.3f\n", name, v);
    out << line;
  }
  return out.str();
}

FrameStats FrameStats::from_text(const std::string& text) {
  FrameStats stats;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "frame") ls >> stats.frame_id;
    else if (key == "candidates") ls >> stats.candidates;
    else if (key == "accepted") ls >> stats.accepted;
    else if (key == "rejected_no_feasible") ls >> stats.rejected_no_feasible;
    else if (key == "rejected_all_collide") ls >> stats.rejected_all_collide;
    else if (key == "rate") {
      int cand;
      double r;
      ls >> cand >> r;
      stats.rates.emplace_back(cand, r);
    } else if (key == "occlusion") {
      std::string name;
      ls >> name;
      stats.occlusion.strategy = strategy_from_name(name);
    } else if (key == "object") {
      ObjectOcclusion o;
      std::string tag, status;
      ls >> o.object_id >> tag >> o.original >> tag >> o.retained >> tag >> o.fraction >> status;
      o.dropped = status == "dropped";
      if (o.dropped) stats.occlusion.dropped_objects.push_back(o.object_id);
      stats.occlusion.objects.push_back(o);
    } else if (key == "deleted_background") {
      // only the count is serialized
    } else if (key == "timing") {
      std::string stage;
      double v;
      ls >> stage >> v;
      if (stage == "partition") stats.timings.partition_ms = v;
      else if (stage == "validspace") stats.timings.validspace_ms = v;
      else if (stage == "sampling") stats.timings.sampling_ms = v;
      else if (stage == "placement") stats.timings.placement_ms = v;
      else if (stage == "occlusion") stats.timings.occlusion_ms = v;
      else if (stage == "global") stats.timings.global_ms = v;
      else if (stage == "total") stats.timings.total_ms = v;
    }
  }
  return stats;
}

// --- manifest ----------------------------------------------------------------

namespace {

ordered_json box_to_json(const Box3d& b) {
  return ordered_json::array({b.cx, b.cy, b.cz, b.length, b.width, b.height, b.yaw});
}

Box3d box_from_json(const nlohmann::json& j, ClassLabel cls) {
  Box3d b;
  b.cx = j[0].get<double>();
  b.cy = j[1].get<double>();
  b.cz = j[2].get<double>();
  b.length = j[3].get<double>();
  b.width = j[4].get<double>();
  b.height = j[5].get<double>();
  b.yaw = j[6].get<double>();
  b.label = cls;
  return b;
}

}  // namespace

std::string Manifest::to_json() const {
  ordered_json j;
  j["format"] = "caaug-manifest";
  j["version"] = 1;
  j["frame"] = frame_id;
  j["kitti_root"] = kitti_root;
  j["database"] = database_path;
  j["master_seed"] = master_seed;
  j["frame_seed"] = frame_seed;
  j["strategy"] = strategy_name(strategy);
  j["global"] = {{"flipped", global.flipped}, {"rotation", global.rotation}, {"scale", global.scale}};
  auto ins = ordered_json::array();
  for (const InsertionRecord& r : insertions) {
    ins.push_back({{"id", r.object_id},
                   {"class", class_name(r.cls)},
                   {"db_index", r.db_index},
                   {"source_frame", r.source_frame},
                   {"dtheta", r.dtheta},
                   {"start_col_from", r.start_col_from},
                   {"start_col_to", r.start_col_to},
                   {"rate", r.rate},
                   {"n_points", r.n_points},
                   {"culled", r.culled},
                   {"box", box_to_json(r.box)}});
  }
  j["insertions"] = std::move(ins);
  auto rej = ordered_json::array();
  for (const RejectionRecord& r : rejections) {
    rej.push_back({{"candidate", r.candidate},
                   {"class", class_name(r.cls)},
                   {"db_index", r.db_index},
                   {"reason", r.reason},
                   {"best_rate", r.best_rate}});
  }
  j["rejections"] = std::move(rej);
  j["notes"] = "inserted labels carry sentinel truncated/occluded/alpha/bbox fields";
  j["config"] = config_text;
  return j.dump(1);
}

Manifest Manifest::from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (j.value("format", "") != "caaug-manifest" || j.value("version", 0) != 1)
      throw FormatVersionMismatch("not a version-1 manifest");
    Manifest m;
    m.frame_id = j.at("frame").get<std::string>();
    m.kitti_root = j.value("kitti_root", "");
    m.database_path = j.value("database", "");
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.frame_seed = j.at("frame_seed").get<std::uint64_t>();
    m.strategy = strategy_from_name(j.at("strategy").get<std::string>());
    m.global.flipped = j.at("global").at("flipped").get<bool>();
    m.global.rotation = j.at("global").at("rotation").get<double>();
    m.global.scale = j.at("global").at("scale").get<double>();
    for (const auto& r : j.value("insertions", nlohmann::json::array())) {
      InsertionRecord rec;
      rec.object_id = r.at("id").get<int>();
      rec.cls = class_from_name(r.at("class").get<std::string>());
      rec.db_index = r.at("db_index").get<int>();
      rec.source_frame = r.value("source_frame", "");
      rec.dtheta = r.at("dtheta").get<double>();
      rec.start_col_from = r.at("start_col_from").get<int>();
      rec.start_col_to = r.at("start_col_to").get<int>();
      rec.rate = r.at("rate").get<double>();
      rec.n_points = r.at("n_points").get<long>();
      rec.culled = r.at("culled").get<bool>();
      rec.box = box_from_json(r.at("box"), rec.cls);
      m.insertions.push_back(std::move(rec));
    }
    for (const auto& r : j.value("rejections", nlohmann::json::array())) {
      m.rejections.push_back(RejectionRecord{r.at("candidate").get<int>(),
                                             class_from_name(r.at("class").get<std::string>()),
                                             r.at("db_index").get<int>(), r.at("reason").get<std::string>(),
                                             r.at("best_rate").get<double>()});
    }
    m.config_text = j.value("config", "");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedFile(std::string("bad manifest: ") + e.what());
  }
}

// --- batch -------------------------------------------------------------------

BatchResult run_batch(const fs::path& kitti_root, const GtDatabase& db, const AugConfig& cfg,
                      const fs::path& out_dir, const BatchOptions& options) {
  const std::vector<std::string> frames =
      options.frames.empty() ? list_frames(kitti_root) : options.frames;
  fs::create_directories(out_dir / "velodyne");
  fs::create_directories(out_dir / "label_2");
  fs::create_directories(out_dir / "manifest");
  fs::create_directories(out_dir / "stats");

  BatchResult result;
  std::atomic<std::size_t> cursor{0};
  std::atomic<long> done{0};
  std::mutex failures_mutex;

  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(frames.size())));
  auto work = [&]() {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= frames.size()) return;
      const std::string& id = frames[i];
      try {
        const FrameBundle bundle = read_frame(kitti_root, id);
        AugmentResult res = augment_frame(bundle, db, cfg, frame_seed(cfg.seed, id));
        res.manifest.kitti_root = kitti_root.string();
        res.manifest.database_path = options.database_path;
        write_frame(res.bundle, out_dir, res.manifest.to_json(), res.stats.to_text());
        done.fetch_add(1);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failures_mutex);
        result.failures.emplace_back(id, e.what());
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  result.frames_done = done.load();
  return result;
}

// --- validation ----------------------------------------------------------------

std::vector<Violation> validate_output(const fs::path& out_dir) {
  std::vector<Violation> violations;
  auto violate = [&](const std::string& frame, const std::string& invariant, const std::string& detail) {
    violations.push_back(Violation{frame, invariant, detail});
  };

  const fs::path manifest_dir = out_dir / "manifest";
  if (!fs::is_directory(manifest_dir)) {
    violate("", "layout", "no manifest directory under " + out_dir.string());
    return violations;
  }
  std::vector<fs::path> manifests;
  for (const auto& entry : fs::directory_iterator(manifest_dir))
    if (entry.path().extension() == ".json") manifests.push_back(entry.path());
  std::sort(manifests.begin(), manifests.end());

  std::map<std::string, GtDatabase> db_cache;

  for (const fs::path& mpath : manifests) {
    const std::string id = mpath.stem().string();
    Manifest man;
    AugConfig cfg;
    try {
      man = Manifest::from_json(slurp(mpath));
      cfg = parse_config_text(man.config_text);
    } catch (const std::exception& e) {
      violate(id, "manifest-parse", e.what());
      continue;
    }
    try {
      if (!db_cache.count(man.database_path)) {
        GtDatabase db = load_database(man.database_path);
        if (!(db.spec == cfg.spec)) db.rebin(cfg.spec);
        db_cache.emplace(man.database_path, std::move(db));
      }
      const GtDatabase& db = db_cache.at(man.database_path);
      const FrameBundle frame = read_frame(man.kitti_root, id);

      // feasibility and range preservation against the recorded placements
      const Partition part = partition_scene(frame.cloud, cfg.pillar_d, cfg.pillar_sigma);
      Validspace vspace = compute_validspace(frame.cloud, part, cfg.spec);
      for (const InsertionRecord& ins : man.insertions) {
        const auto& bucket = db.objects(ins.cls);
        if (ins.db_index < 0 || ins.db_index >= static_cast<int>(bucket.size())) {
          violate(id, "manifest-parse", "db_index out of range");
          continue;
        }
        const GtObject& src = bucket[static_cast<std::size_t>(ins.db_index)];
        if (std::abs(src.box.range() - ins.box.range()) > 1e-9) {
          violate(id, "range-preservation",
                  "object " + std::to_string(ins.object_id) + " moved radially by " +
                      std::to_string(std::abs(src.box.range() - ins.box.range())) + " m");
        }
        if (cfg.placement.rotate) {
          const double far_edge = src.box.range() + src.box.length / 2;
          const double rate =
              rate_at_column(vspace, src.rangebin, far_edge, ins.start_col_to, cfg.placement.rule);
          if (!(rate > cfg.placement.min_rate)) {
            violate(id, "feasibility",
                    "object " + std::to_string(ins.object_id) + " rate " + std::to_string(rate) +
                        " <= " + std::to_string(cfg.placement.min_rate));
          }
        }
        if (cfg.placement.update_validspace)
          vspace = update_validspace(std::move(vspace), ins.box, ins.start_col_to, src.span());
      }

      // collision freedom among recorded boxes and the scene's
      for (std::size_t i = 0; i < man.insertions.size(); ++i) {
        std::vector<Box3d> others = frame.boxes;
        for (std::size_t k = 0; k < man.insertions.size(); ++k)
          if (k != i) others.push_back(man.insertions[k].box);
        if (collision_check(man.insertions[i].box, others, cfg.placement.collision))
          violate(id, "collision", "inserted box " + std::to_string(man.insertions[i].object_id));
      }

      // label accounting
      long culled = 0;
      for (const InsertionRecord& ins : man.insertions)
        if (ins.culled) ++culled;
      const auto written = read_labels(out_dir / "label_2" / (id + ".txt"));
      long non_dontcare = 0;
      for (const auto& l : written)
        if (l.type != "DontCare") ++non_dontcare;
      const long expected = static_cast<long>(frame.boxes.size()) +
                            static_cast<long>(man.insertions.size()) - culled;
      if (non_dontcare != expected) {
        violate(id, "label-count",
                "expected " + std::to_string(expected) + " labels, found " + std::to_string(non_dontcare));
      }

      // deterministic replay: bytes must match, strategy postconditions must hold
      const AugmentResult replay = augment_frame(frame, db, cfg, man.frame_seed);

      if (cfg.strategy == Strategy::Culling) {
        for (const ObjectOcclusion& o : replay.stats.occlusion.objects) {
          const bool should_drop = o.retained < cfg.culling_min_points || o.fraction < cfg.culling_min_fraction;
          if (o.dropped != should_drop)
            violate(id, "culling-threshold", "object " + std::to_string(o.object_id));
        }
      }
      if (cfg.strategy == Strategy::Drilling && replay.occluded.tagged()) {
        const RangeImage img = render_range_image(replay.occluded, cfg.spec);
        std::map<std::pair<int, int>, std::pair<bool, bool>> seen;
        auto mark = [&](std::int32_t idx, const Pixel& px) {
          auto& flags = seen[{px.u, px.v}];
          if (replay.occluded.tags[static_cast<std::size_t>(idx)].kind == Provenance::Inserted)
            flags.second = true;
          else
            flags.first = true;
        };
        for (int vv = 0; vv < cfg.spec.height; ++vv)
          for (int uu = 0; uu < cfg.spec.width; ++uu)
            if (!img.at(uu, vv).empty()) mark(img.at(uu, vv).point, Pixel{uu, vv});
        for (const auto& [idx, px] : img.shadow) mark(idx, px);
        for (const auto& [px, flags] : seen) {
          if (flags.first && flags.second) {
            violate(id, "drilling-exclusivity",
                    "pixel " + std::to_string(px.first) + "," + std::to_string(px.second));
            break;
          }
        }
      }

      std::ostringstream velobuf;
      {
        std::vector<float> raw(static_cast<std::size_t>(replay.bundle.cloud.size()) * 4);
        for (Eigen::Index i = 0; i < replay.bundle.cloud.size(); ++i)
          for (int c = 0; c < 4; ++c)
            raw[static_cast<std::size_t>(i) * 4 + static_cast<std::size_t>(c)] =
                static_cast<float>(replay.bundle.cloud.data(i, c));
        velobuf.write(reinterpret_cast<const char*>(raw.data()),
                      static_cast<std::streamsize>(raw.size() * 4));
      }
      if (velobuf.str() != slurp(out_dir / "velodyne" / (id + ".bin")))
        violate(id, "replay-mismatch", "velodyne bytes differ from the deterministic replay");

      std::string label_text;
      {
        std::vector<KittiLabel> lines = replay.bundle.labels;
        lines.insert(lines.end(), replay.bundle.dont_care.begin(), replay.bundle.dont_care.end());
        for (const KittiLabel& l : lines) {
          label_text += label_line(l);
          label_text += '\n';
        }
      }
      if (label_text != slurp(out_dir / "label_2" / (id + ".txt")))
        violate(id, "replay-mismatch", "label file differs from the deterministic replay");

      Manifest replay_man = replay.manifest;
      replay_man.kitti_root = man.kitti_root;
      replay_man.database_path = man.database_path;
      if (replay_man.to_json() != slurp(mpath))
        violate(id, "replay-mismatch", "manifest differs from the deterministic replay");
    } catch (const std::exception& e) {
      violate(id, "replay-error", e.what());
    }
  }
  return violations;
}

std::string aggregate_stats(const fs::path& out_dir) {
  std::vector<fs::path> files;
  const fs::path stats_dir = out_dir / "stats";
  if (fs::is_directory(stats_dir))
    for (const auto& entry : fs::directory_iterator(stats_dir))
      if (entry.path().extension() == ".txt") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  long frames = 0, candidates = 0, accepted = 0, no_feasible = 0, all_collide = 0;
  long objects = 0, dropped = 0;
  double total_ms = 0;
  std::array<long, 10> rate_hist{};
  std::array<long, 10> fraction_hist{};
  for (const fs::path& f : files) {
    const FrameStats s = FrameStats::from_text(slurp(f));
    ++frames;
    candidates += s.candidates;
    accepted += s.accepted;
    no_feasible += s.rejected_no_feasible;
    all_collide += s.rejected_all_collide;
    total_ms += s.timings.total_ms;
    for (const auto& [cand, rate] : s.rates) {
      const int bin = std::min(9, std::max(0, static_cast<int>(rate * 10.0)));
      ++rate_hist[static_cast<std::size_t>(bin)];
    }
    for (const ObjectOcclusion& o : s.occlusion.objects) {
      ++objects;
      if (o.dropped) ++dropped;
      const int bin = std::min(9, std::max(0, static_cast<int>(o.fraction * 10.0)));
      ++fraction_hist[static_cast<std::size_t>(bin)];
    }
  }

  std::ostringstream out;
  out << "frames " << frames << "\n";
  out << "candidates " << candidates << "\n";
  out << "accepted " << accepted << "\n";
  out << "rejected_no_feasible " << no_feasible << "\n";
  out << "rejected_all_collide " << all_collide << "\n";
  if (candidates > 0)
    out << "acceptance_rate " << fmt_rate(static_cast<double>(accepted) / static_cast<double>(candidates))
        << "\n";
  out << "inserted_objects " << objects << "\n";
  out << "culled_objects " << dropped << "\n";
  out << "rate_histogram";
  for (const long c : rate_hist) out << " " << c;
  out << "\n";
  out << "retained_fraction_histogram";
  for (const long c : fraction_hist) out << " " << c;
  out << "\n";
  if (frames > 0) out << "mean_frame_ms " << fmt_rate(total_ms / static_cast<double>(frames)) << "\n";
  return out.str();
}

}  // namespace caaug
