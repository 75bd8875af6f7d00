#include <doctest.h>

#include <map>
#include <random>
#include <set>
#include <tuple>

#include "caaug/range_image.hpp"
#include "oracles.hpp"

using namespace caaug;

namespace {

PointCloud beam_points(const LidarSpec& spec,
                       std::initializer_list<std::tuple<int, int, double, PointTag>> entries) {
  PointCloud c;
  c.data.resize(static_cast<Eigen::Index>(entries.size()), 4);
  Eigen::Index i = 0;
  for (const auto& [u, v, range, tag] : entries) {
    const Eigen::Vector3d d = oracle::beam_direction(u, v, spec);
    c.data.row(i).head<3>() = (range * d).transpose();
    c.data(i, 3) = 0.5;
    c.tags.push_back(tag);
    ++i;
  }
  return c;
}

constexpr PointTag kGround{Provenance::Ground, -1};
constexpr PointTag kObstacle{Provenance::Obstacle, -1};
PointTag inserted(int id) { return PointTag{Provenance::Inserted, id}; }

PointCloud random_tagged(std::mt19937_64& gen, const LidarSpec& spec, int n_background, int n_objects,
                         int pts_per_obj) {
  std::uniform_real_distribution<double> xy(-30, 30), zc(-1.5, 1.0), rr(3.0, 50.0);
  std::uniform_int_distribution<int> ud(0, spec.width - 1), vd(0, spec.height - 1);
  PointCloud c;
  c.data.resize(n_background + n_objects * pts_per_obj, 4);
  Eigen::Index row = 0;
  for (int i = 0; i < n_background; ++i) {
    c.data.row(row).head<3>() = (rr(gen) * oracle::beam_direction(ud(gen), vd(gen), spec)).transpose();
    c.data(row, 3) = 0.3;
    c.tags.push_back(gen() % 2 ? kGround : kObstacle);
    ++row;
  }
  for (int obj = 0; obj < n_objects; ++obj) {
    const int base_u = ud(gen);
    for (int k = 0; k < pts_per_obj; ++k) {
      const int u = (base_u + k / 3) % spec.width;
      const int v = vd(gen);
      c.data.row(row).head<3>() = (rr(gen) * oracle::beam_direction(u, v, spec)).transpose();
      c.data(row, 3) = 0.9;
      c.tags.push_back(inserted(obj));
      ++row;
    }
  }
  return c;
}

}  // namespace

TEST_CASE("render_range_image: nearest point wins, loser shadows") {
  const LidarSpec spec;
  const PointCloud c = beam_points(spec, {{40, 10, 8.0, kObstacle}, {40, 10, 5.0, kObstacle}});
  const RangeImage img = render_range_image(c, spec);
  CHECK(img.at(40, 10).point == 1);
  CHECK(img.at(40, 10).range == doctest::Approx(5.0));
  REQUIRE(img.shadow.size() == 1);
  CHECK(img.shadow[0].first == 0);
  CHECK(img.shadow[0].second == Pixel{40, 10});
  CHECK(img.unprojected.empty());
}

TEST_CASE("render_range_image: single point, tie breaks to the lower index") {
  const LidarSpec spec;
  const PointCloud one = beam_points(spec, {{7, 3, 12.0, kGround}});
  const RangeImage img = render_range_image(one, spec);
  CHECK(img.occupied() == 1);
  CHECK(img.shadow.empty());

  PointCloud twin = beam_points(spec, {{7, 3, 12.0, kGround}});
  PointCloud copy = twin;
  twin.append(copy);  // identical coordinates, identical ranges
  const RangeImage img2 = render_range_image(twin, spec);
  CHECK(img2.at(7, 3).point == 0);
  REQUIRE(img2.shadow.size() == 1);
  CHECK(img2.shadow[0].first == 1);
}

TEST_CASE("render_range_image matches the per-pixel minimum oracle") {
  const LidarSpec spec{.width = 128, .height = 16};
  std::mt19937_64 gen(71);
  for (int t = 0; t < 10; ++t) {
    const PointCloud c = random_tagged(gen, spec, 800, 4, 30);
    const RangeImage img = render_range_image(c, spec);
    const auto ref = oracle::zbuffer_winners(c, spec);
    std::size_t occupied = 0;
    for (int v = 0; v < spec.height; ++v) {
      for (int u = 0; u < spec.width; ++u) {
        const auto& cell = img.at(u, v);
        const std::uint64_t key = (static_cast<std::uint64_t>(v) << 32) | static_cast<std::uint32_t>(u);
        const auto it = ref.find(key);
        if (cell.empty()) {
          CHECK(it == ref.end());
        } else {
          REQUIRE(it != ref.end());
          CHECK(cell.point == it->second);
          ++occupied;
        }
      }
    }
    CHECK(occupied == ref.size());
    // accounting: every point is a winner, a shadow, or unprojected
    CHECK(occupied + img.shadow.size() + img.unprojected.size() ==
          static_cast<std::size_t>(c.size()));
  }
}

TEST_CASE("apply_naive: hidden object disappears, open object survives") {
  const LidarSpec spec;
  // an object point behind an obstacle at the same pixel
  const PointCloud hidden = beam_points(spec, {{100, 20, 4.0, kObstacle}, {100, 20, 9.0, inserted(0)}});
  const PointCloud out = apply_naive(hidden, spec);
  REQUIRE(out.size() == 1);
  CHECK(out.tags[0].kind == Provenance::Obstacle);

  const PointCloud open = beam_points(spec, {{100, 20, 4.0, kObstacle}, {200, 20, 9.0, inserted(0)}});
  const PointCloud out2 = apply_naive(open, spec);
  CHECK(out2.size() == 2);
}

TEST_CASE("apply_naive: z-buffer deletes any provenance, keeps out-of-fov points") {
  const LidarSpec spec;
  PointCloud c = beam_points(spec, {{50, 5, 10.0, kGround}, {50, 5, 6.0, inserted(0)}});
  PointCloud above;  // out of the vertical fov, must pass through untouched
  above.data.resize(1, 4);
  above.data.row(0) << 1.0, 0.0, 10.0, 0.5;
  above.tags.push_back(kGround);
  c.append(above);
  const PointCloud out = apply_naive(c, spec);
  REQUIRE(out.size() == 2);
  CHECK(out.tags[0].kind == Provenance::Inserted);  // background lost the pixel
  CHECK(out.data(1, 2) == 10.0);                    // out-of-fov survivor
}

TEST_CASE("apply_naive output equals the oracle winner set") {
  const LidarSpec spec{.width = 128, .height = 16};
  std::mt19937_64 gen(5);
  const PointCloud c = random_tagged(gen, spec, 600, 3, 25);
  const PointCloud out = apply_naive(c, spec);
  const auto ref = oracle::zbuffer_winners(c, spec);
  std::set<double> out_x;
  for (Eigen::Index i = 0; i < out.size(); ++i) out_x.insert(out.data(i, 0));
  long in_view = 0;
  for (const auto& [key, idx] : ref) {
    CHECK(out_x.count(c.data(idx, 0)) == 1);
    ++in_view;
  }
  const RangeImage img = render_range_image(c, spec);
  CHECK(out.size() == in_view + static_cast<long>(img.unprojected.size()));
}

TEST_CASE("apply_culling: drop-threshold table rows") {
  const LidarSpec spec;

  auto build = [&](int n_points, int blocked) {
    PointCloud c;
    c.data.resize(n_points + blocked, 4);
    c.tags.clear();
    // object points on distinct pixels at range 10
    for (int i = 0; i < n_points; ++i) {
      c.data.row(i).head<3>() = (10.0 * oracle::beam_direction(10 + i, 8, spec)).transpose();
      c.data(i, 3) = 0.5;
      c.tags.push_back(inserted(0));
    }
    // nearer background blockers on the first `blocked` pixels
    for (int i = 0; i < blocked; ++i) {
      c.data.row(n_points + i).head<3>() = (4.0 * oracle::beam_direction(10 + i, 8, spec)).transpose();
      c.data(n_points + i, 3) = 0.5;
      c.tags.push_back(kObstacle);
    }
    return c;
  };

  // 20 original, 4 retained: fraction 0.20 < 0.25 -> dropped
  {
    auto [out, report] = apply_culling(build(20, 16), spec);
    REQUIRE(report.objects.size() == 1);
    CHECK(report.objects[0].retained == 4);
    CHECK(report.objects[0].dropped);
    for (const auto& t : out.tags) CHECK(t.kind != Provenance::Inserted);
  }
  // 3 original fully retained: 3 < 4 -> dropped
  {
    auto [out, report] = apply_culling(build(3, 0), spec);
    CHECK(report.objects[0].retained == 3);
    CHECK(report.objects[0].dropped);
  }
  // 12 original, 10 retained: kept with 10 points
  {
    auto [out, report] = apply_culling(build(12, 2), spec);
    CHECK(report.objects[0].retained == 10);
    CHECK_FALSE(report.objects[0].dropped);
    long kept = 0;
    for (const auto& t : out.tags)
      if (t.kind == Provenance::Inserted) ++kept;
    CHECK(kept == 10);
  }
  // boundary: exactly 4 retained of 16 is exactly 0.25 -> kept
  {
    auto [out, report] = apply_culling(build(16, 12), spec);
    CHECK(report.objects[0].retained == 4);
    CHECK_FALSE(report.objects[0].dropped);
  }
}

TEST_CASE("apply_culling: background-vs-background conflicts are left alone") {
  const LidarSpec spec;
  const PointCloud c = beam_points(spec, {{60, 12, 10.0, kGround}, {60, 12, 5.0, kObstacle}});
  auto [out, report] = apply_culling(c, spec);
  CHECK(out.size() == 2);  // no inserted points, nothing changes
  CHECK(report.deleted_background.empty());
}

TEST_CASE("apply_culling: background dies only to a nearer inserted point") {
  const LidarSpec spec;
  // background in front of the object point: object loses, background stays
  // (thresholds relaxed: this case probes the z-buffer rule, not the drop rule)
  const PointCloud front = beam_points(spec, {{60, 12, 5.0, kGround}, {60, 12, 10.0, inserted(0)}});
  auto [out1, rep1] = apply_culling(front, spec, 0, 0.0);
  REQUIRE(out1.size() == 1);
  CHECK(out1.tags[0].kind == Provenance::Ground);
  CHECK(rep1.deleted_background.empty());

  // object in front: background deleted and reported
  const PointCloud behind = beam_points(spec, {{60, 12, 10.0, kGround}, {60, 12, 5.0, inserted(0)}});
  auto [out2, rep2] = apply_culling(behind, spec, 0, 0.0);
  REQUIRE(out2.size() == 1);
  CHECK(out2.tags[0].kind == Provenance::Inserted);
  REQUIRE(rep2.deleted_background.size() == 1);
  CHECK(rep2.deleted_background[0] == 0);
}

TEST_CASE("apply_drilling: background sharing an object pixel dies even when nearer") {
  const LidarSpec spec;
  const PointCloud c = beam_points(spec, {{80, 30, 3.0, kGround}, {80, 30, 9.0, inserted(0)}});
  auto [out, report] = apply_drilling(c, spec);
  REQUIRE(out.size() == 1);
  CHECK(out.tags[0].kind == Provenance::Inserted);
  REQUIRE(report.deleted_background.size() == 1);

  // disjoint pixels: nothing happens
  const PointCloud apart = beam_points(spec, {{80, 30, 3.0, kGround}, {81, 30, 9.0, inserted(0)}});
  auto [out2, rep2] = apply_drilling(apart, spec);
  CHECK(out2.size() == 2);
  CHECK(rep2.deleted_background.empty());
}

TEST_CASE("apply_drilling: output has no mixed pixels, objects z-buffer among themselves") {
  const LidarSpec spec{.width = 128, .height = 16};
  std::mt19937_64 gen(9);
  for (int t = 0; t < 20; ++t) {
    const PointCloud c = random_tagged(gen, spec, 500, 3, 30);
    auto [out, report] = apply_drilling(c, spec);
    const RangeImage img = render_range_image(out, spec);
    // collect provenance per pixel over winners and shadows
    std::vector<std::pair<Pixel, std::int32_t>> all;
    for (int v = 0; v < spec.height; ++v)
      for (int u = 0; u < spec.width; ++u)
        if (!img.at(u, v).empty()) all.push_back({Pixel{u, v}, img.at(u, v).point});
    for (const auto& [idx, px] : img.shadow) all.push_back({px, idx});
    std::map<std::pair<int, int>, std::pair<bool, bool>> seen;  // pixel -> (background, object)
    for (const auto& [px, idx] : all) {
      auto& flags = seen[{px.u, px.v}];
      if (out.tags[static_cast<std::size_t>(idx)].kind == Provenance::Inserted)
        flags.second = true;
      else
        flags.first = true;
    }
    for (const auto& [px, flags] : seen) CHECK_FALSE((flags.first && flags.second));
    // object pixels hold at most one inserted point (object-vs-object z-buffer)
    for (const auto& [idx, px] : img.shadow)
      CHECK(out.tags[static_cast<std::size_t>(idx)].kind != Provenance::Inserted);
  }
}

TEST_CASE("resolve: dispatch and the None strategy") {
  const LidarSpec spec;
  std::mt19937_64 gen(33);
  const PointCloud merged = random_tagged(gen, spec, 200, 2, 12);
  auto [none_out, none_rep] = resolve(merged, spec, Strategy::None);
  CHECK(none_out.size() == merged.size());
  CHECK(none_rep.dropped_objects.empty());
  REQUIRE(none_rep.objects.size() == 2);
  CHECK(none_rep.objects[0].retained == none_rep.objects[0].original);

  // culling with nothing occluded drops nothing
  const PointCloud open = beam_points(spec, {{10, 8, 5.0, inserted(0)},
                                             {11, 8, 5.0, inserted(0)},
                                             {12, 8, 5.0, inserted(0)},
                                             {13, 8, 5.0, inserted(0)},
                                             {300, 8, 5.0, kGround}});
  auto [cull_out, cull_rep] = resolve(open, spec, Strategy::Culling);
  CHECK(cull_out.size() == 5);
  CHECK(cull_rep.dropped_objects.empty());

  CHECK_THROWS_AS((void)resolve(merged, spec, static_cast<Strategy>(99)), UnknownStrategy);
}

TEST_CASE("strategy names round-trip") {
  CHECK(strategy_from_name("culling") == Strategy::Culling);
  CHECK(strategy_from_name("naive") == Strategy::Naive);
  CHECK(strategy_from_name("drilling") == Strategy::Drilling);
  CHECK(strategy_from_name("none") == Strategy::None);
  CHECK_THROWS_AS((void)strategy_from_name("bogus"), UnknownStrategy);
  CHECK(strategy_name(Strategy::Drilling) == std::string("drilling"));
}
