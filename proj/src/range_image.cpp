#include "caaug/range_image.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

namespace caaug {

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::None: return "none";
    case Strategy::Naive: return "naive";
    case Strategy::Culling: return "culling";
    case Strategy::Drilling: return "drilling";
  }
  throw UnknownStrategy("strategy value out of range");
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "none") return Strategy::None;
  if (name == "naive") return Strategy::Naive;
  if (name == "culling") return Strategy::Culling;
  if (name == "drilling") return Strategy::Drilling;
  throw UnknownStrategy("unknown strategy: " + name);
}

std::size_t RangeImage::occupied() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const Cell& c) { return !c.empty(); }));
}

RangeImage render_range_image(const PointCloud& cloud, const LidarSpec& spec) {
  RangeImage img;
  img.spec = spec;
  img.cells.assign(static_cast<std::size_t>(spec.width) * spec.height, {});
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const double r = cloud.range(i);
    if (r == 0.0) {
      img.unprojected.push_back(static_cast<std::int32_t>(i));
      continue;
    }
    const auto px = spherical_project(cloud.xyz(i), spec);
    if (!px) {
      img.unprojected.push_back(static_cast<std::int32_t>(i));
      continue;
    }
    RangeImage::Cell& cell = img.at(px->u, px->v);
    if (cell.empty()) {
      cell = {static_cast<std::int32_t>(i), r};
    } else if (r < cell.range) {  // ascending index scan: ties keep the incumbent
      img.shadow.emplace_back(cell.point, *px);
      cell = {static_cast<std::int32_t>(i), r};
    } else {
      img.shadow.emplace_back(static_cast<std::int32_t>(i), *px);
    }
  }
  return img;
}

std::string OcclusionReport::to_text() const {
  std::ostringstream out;
  out << "occlusion " << strategy_name(strategy) << "\n";
  char line[160];
  for (const ObjectOcclusion& o : objects) {
    std::snprintf(line, sizeof line, "object %d original %ld retained %ld fraction %.6f %s\n",
                  o.object_id, o.original, o.retained, o.fraction, o.dropped ? "dropped" : "kept");
    out << line;
  }
  out << "deleted_background " << deleted_background.size() << "\n";
  return out.str();
}

namespace {

struct PixelKey {
  static std::uint64_t of(const Pixel& px) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(px.v)) << 32) |
           static_cast<std::uint32_t>(px.u);
  }
};

bool is_inserted(const PointCloud& cloud, Eigen::Index i) {
  return cloud.tags[static_cast<std::size_t>(i)].kind == Provenance::Inserted;
}

/// Projection status per point: -2 unprojected, otherwise flat pixel index.
std::vector<std::int64_t> pixel_of_each(const PointCloud& cloud, const LidarSpec& spec) {
  std::vector<std::int64_t> px(static_cast<std::size_t>(cloud.size()), -2);
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const double r = cloud.range(i);
    if (r == 0.0) continue;
    const auto p = spherical_project(cloud.xyz(i), spec);
    if (p) px[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(p->v) * spec.width + p->u;
  }
  return px;
}

PointCloud keep_points(const PointCloud& cloud, const std::vector<char>& keep) {
  std::vector<Eigen::Index> idx;
  idx.reserve(keep.size());
  for (Eigen::Index i = 0; i < cloud.size(); ++i)
    if (keep[static_cast<std::size_t>(i)]) idx.push_back(i);
  return cloud.select(idx);
}

std::vector<ObjectOcclusion> per_object_stats(const PointCloud& cloud, const std::vector<char>& keep) {
  std::map<int, ObjectOcclusion> stats;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const PointTag& tag = cloud.tags[static_cast<std::size_t>(i)];
    if (tag.kind != Provenance::Inserted) continue;
    ObjectOcclusion& o = stats[tag.object_id];
    o.object_id = tag.object_id;
    ++o.original;
    if (keep[static_cast<std::size_t>(i)]) ++o.retained;
  }
  std::vector<ObjectOcclusion> out;
  out.reserve(stats.size());
  for (auto& [id, o] : stats) {
    o.fraction = o.original > 0 ? static_cast<double>(o.retained) / static_cast<double>(o.original) : 0.0;
    out.push_back(o);
  }
  return out;
}

void require_tags(const PointCloud& cloud) {
  if (cloud.size() > 0 && !cloud.tagged())
    throw Error("occlusion strategies need per-point provenance tags");
}

}  // namespace

PointCloud apply_naive(const PointCloud& merged, const LidarSpec& spec) {
  require_tags(merged);
  const RangeImage img = render_range_image(merged, spec);
  std::vector<char> keep(static_cast<std::size_t>(merged.size()), 0);
  for (const auto& cell : img.cells)
    if (!cell.empty()) keep[static_cast<std::size_t>(cell.point)] = 1;
  for (const std::int32_t i : img.unprojected) keep[static_cast<std::size_t>(i)] = 1;
  return keep_points(merged, keep);
}

std::pair<PointCloud, OcclusionReport> apply_culling(const PointCloud& merged, const LidarSpec& spec,
                                                     int min_points, double min_fraction) {
  require_tags(merged);
  const auto px = pixel_of_each(merged, spec);
  const auto n_px = static_cast<std::size_t>(spec.width) * spec.height;

  // per pixel: the nearest point overall and the nearest inserted point
  std::vector<std::int32_t> winner(n_px, -1);
  std::vector<std::int32_t> obj_winner(n_px, -1);
  auto beats = [&](Eigen::Index a, std::int32_t b) {
    const double ra = merged.range(a), rb = merged.range(b);
    return ra < rb || (ra == rb && a < b);
  };
  for (Eigen::Index i = 0; i < merged.size(); ++i) {
    const auto p = px[static_cast<std::size_t>(i)];
    if (p < 0) continue;
    const auto slot = static_cast<std::size_t>(p);
    if (winner[slot] < 0 || beats(i, winner[slot])) winner[slot] = static_cast<std::int32_t>(i);
    if (is_inserted(merged, i) && (obj_winner[slot] < 0 || beats(i, obj_winner[slot])))
      obj_winner[slot] = static_cast<std::int32_t>(i);
  }

  OcclusionReport report;
  report.strategy = Strategy::Culling;
  std::vector<char> keep(static_cast<std::size_t>(merged.size()), 1);
  for (Eigen::Index i = 0; i < merged.size(); ++i) {
    const auto p = px[static_cast<std::size_t>(i)];
    if (p < 0) continue;  // out of view: untouched
    const auto slot = static_cast<std::size_t>(p);
    if (is_inserted(merged, i)) {
      // inserted points obey the full z-buffer
      if (winner[slot] != static_cast<std::int32_t>(i)) keep[static_cast<std::size_t>(i)] = 0;
    } else if (obj_winner[slot] >= 0 && beats(obj_winner[slot], static_cast<std::int32_t>(i))) {
      // background dies only to a nearer inserted point
      keep[static_cast<std::size_t>(i)] = 0;
      report.deleted_background.push_back(static_cast<std::int32_t>(i));
    }
  }

  report.objects = per_object_stats(merged, keep);
  for (const ObjectOcclusion& o : report.objects) {
    // drop thresholds: strictly fewer points or strictly smaller fraction
    if (o.retained < min_points || o.fraction < min_fraction) {
      report.dropped_objects.push_back(o.object_id);
    }
  }
  for (auto& o : report.objects)
    o.dropped = std::find(report.dropped_objects.begin(), report.dropped_objects.end(), o.object_id) !=
                report.dropped_objects.end();
  if (!report.dropped_objects.empty()) {
    for (Eigen::Index i = 0; i < merged.size(); ++i) {
      const PointTag& tag = merged.tags[static_cast<std::size_t>(i)];
      if (tag.kind == Provenance::Inserted &&
          std::find(report.dropped_objects.begin(), report.dropped_objects.end(), tag.object_id) !=
              report.dropped_objects.end())
        keep[static_cast<std::size_t>(i)] = 0;
    }
  }
  return {keep_points(merged, keep), std::move(report)};
}

std::pair<PointCloud, OcclusionReport> apply_drilling(const PointCloud& merged, const LidarSpec& spec) {
  require_tags(merged);
  const auto px = pixel_of_each(merged, spec);
  const auto n_px = static_cast<std::size_t>(spec.width) * spec.height;

  std::vector<std::int32_t> obj_winner(n_px, -1);
  auto beats = [&](Eigen::Index a, std::int32_t b) {
    const double ra = merged.range(a), rb = merged.range(b);
    return ra < rb || (ra == rb && a < b);
  };
  for (Eigen::Index i = 0; i < merged.size(); ++i) {
    const auto p = px[static_cast<std::size_t>(i)];
    if (p < 0 || !is_inserted(merged, i)) continue;
    const auto slot = static_cast<std::size_t>(p);
    if (obj_winner[slot] < 0 || beats(i, obj_winner[slot])) obj_winner[slot] = static_cast<std::int32_t>(i);
  }

  OcclusionReport report;
  report.strategy = Strategy::Drilling;
  std::vector<char> keep(static_cast<std::size_t>(merged.size()), 1);
  for (Eigen::Index i = 0; i < merged.size(); ++i) {
    const auto p = px[static_cast<std::size_t>(i)];
    if (p < 0) continue;
    const auto slot = static_cast<std::size_t>(p);
    if (obj_winner[slot] < 0) continue;  // pixel untouched by any object
    if (is_inserted(merged, i)) {
      // object-vs-object conflicts resolve by z-buffer
      if (obj_winner[slot] != static_cast<std::int32_t>(i)) keep[static_cast<std::size_t>(i)] = 0;
    } else {
      keep[static_cast<std::size_t>(i)] = 0;
      report.deleted_background.push_back(static_cast<std::int32_t>(i));
    }
  }
  report.objects = per_object_stats(merged, keep);
  return {keep_points(merged, keep), std::move(report)};
}

std::pair<PointCloud, OcclusionReport> resolve(const PointCloud& merged, const LidarSpec& spec,
                                               Strategy strategy, int culling_min_points,
                                               double culling_min_fraction) {
  switch (strategy) {
    case Strategy::None: {
      OcclusionReport report;
      report.strategy = Strategy::None;
      if (merged.tagged()) {
        const std::vector<char> keep(static_cast<std::size_t>(merged.size()), 1);
        report.objects = per_object_stats(merged, keep);
      }
      return {merged, std::move(report)};
    }
    case Strategy::Naive: {
      require_tags(merged);
      const RangeImage img = render_range_image(merged, spec);
      std::vector<char> keep(static_cast<std::size_t>(merged.size()), 0);
      for (const auto& cell : img.cells)
        if (!cell.empty()) keep[static_cast<std::size_t>(cell.point)] = 1;
      for (const std::int32_t i : img.unprojected) keep[static_cast<std::size_t>(i)] = 1;
      OcclusionReport report;
      report.strategy = Strategy::Naive;
      report.objects = per_object_stats(merged, keep);
      for (Eigen::Index i = 0; i < merged.size(); ++i)
        if (!keep[static_cast<std::size_t>(i)] && !is_inserted(merged, i))
          report.deleted_background.push_back(static_cast<std::int32_t>(i));
      return {keep_points(merged, keep), std::move(report)};
    }
    case Strategy::Culling:
      return apply_culling(merged, spec, culling_min_points, culling_min_fraction);
    case Strategy::Drilling:
      return apply_drilling(merged, spec);
  }
  throw UnknownStrategy("strategy value out of range");
}

}  // namespace caaug
