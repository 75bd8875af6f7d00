#include "caaug/gt_database.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <numeric>
#include <sstream>

namespace caaug {

Rangebin compute_rangebin(const PointCloud& points, const LidarSpec& spec) {
  if (points.empty()) throw EmptyObject("compute_rangebin: no points");
  const int w = spec.width;
  std::vector<int> counts(static_cast<std::size_t>(w), 0);
  long projectable = 0;
  for (Eigen::Index i = 0; i < points.size(); ++i) {
    const auto col = column_of(points.xyz(i), spec);
    if (!col) continue;
    ++counts[static_cast<std::size_t>(*col)];
    ++projectable;
  }
  if (projectable == 0) throw EmptyObject("compute_rangebin: no projectable points");

  std::vector<int> occupied;
  for (int c = 0; c < w; ++c)
    if (counts[static_cast<std::size_t>(c)] > 0) occupied.push_back(c);

  // the minimal covering arc is the complement of the largest circular gap;
  // among equal gaps the earliest in sorted order wins
  const std::size_t m = occupied.size();
  int best_gap = -1;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const int gap = (i + 1 < m) ? occupied[i + 1] - occupied[i] : occupied[0] + w - occupied[m - 1];
    if (gap > best_gap) {
      best_gap = gap;
      best_i = i;
    }
  }
  const int start = occupied[(best_i + 1) % m];
  const int end = occupied[best_i];
  const int span = (end - start + w) % w + 1;
  if (span > w / 2)
    throw SpanTooWide("compute_rangebin: arc of " + std::to_string(span) + " columns exceeds half the image");

  Rangebin rb;
  rb.start_col = start;
  rb.bins = Eigen::ArrayXi::Zero(span);
  for (const int c : occupied) rb.bins[(c - start + w) % w] = counts[static_cast<std::size_t>(c)];
  return rb;
}

long GtDatabase::rebin(const LidarSpec& new_spec) {
  long dropped = 0;
  for (auto& bucket : by_class) {
    std::vector<GtObject> kept;
    kept.reserve(bucket.size());
    for (GtObject& obj : bucket) {
      try {
        const Rangebin rb = compute_rangebin(obj.points, new_spec);
        obj.rangebin = rb.bins;
        obj.start_col = rb.start_col;
        kept.push_back(std::move(obj));
      } catch (const Error&) {
        ++dropped;
      }
    }
    bucket = std::move(kept);
  }
  spec = new_spec;
  return dropped;
}

GtDatabase build_database(std::span<const FrameBundle> frames, const LidarSpec& spec, BuildStats* stats) {
  GtDatabase db;
  db.spec = spec;
  BuildStats local;
  for (const FrameBundle& frame : frames) {
    for (const Box3d& box : frame.boxes) {
      if (box.label == ClassLabel::Other) {
        ++local.other_class;
        continue;
      }
      const auto idx = points_in_box_3d(frame.cloud, box);
      if (idx.empty()) {
        ++local.skipped_empty;
        continue;
      }
      GtObject obj;
      obj.box = box;
      obj.points = frame.cloud.select(idx);
      obj.points.tags.clear();
      obj.source_frame = frame.id;
      try {
        const Rangebin rb = compute_rangebin(obj.points, spec);
        obj.rangebin = rb.bins;
        obj.start_col = rb.start_col;
      } catch (const SpanTooWide&) {
        ++local.skipped_wide;
        continue;
      }
      db.objects(box.label).push_back(std::move(obj));
      ++local.objects;
    }
  }
  if (stats) *stats = local;
  return db;
}

std::vector<GtRef> sample_objects(const GtDatabase& db, const SampleCounts& counts, Rng& rng) {
  std::vector<GtRef> out;
  for (const ClassLabel cls : {ClassLabel::Car, ClassLabel::Pedestrian, ClassLabel::Cyclist}) {
    const auto population = static_cast<int>(db.objects(cls).size());
    const int want = std::min(counts.of(cls), population);
    if (want <= 0) continue;
    // partial Fisher-Yates: the first `want` slots become the sample
    std::vector<int> order(static_cast<std::size_t>(population));
    std::iota(order.begin(), order.end(), 0);
    for (int i = 0; i < want; ++i) {
      const auto j = i + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(population - i)));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
      out.push_back(GtRef{cls, order[static_cast<std::size_t>(i)]});
    }
  }
  return out;
}

// --- persistence -------------------------------------------------------------
// Little-endian binary container, versioned; layout documented in
// docs/formats.md. A human-readable sidecar <path>.index.txt lists counts.

namespace {

constexpr char kMagic[8] = {'C', 'A', 'U', 'G', 'G', 'T', 'D', 'B'};
constexpr std::uint32_t kVersion = 1;

void put_bytes(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  put_bytes(out, b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  put_bytes(out, b, 8);
}

void put_i32(std::ostream& out, std::int32_t v) { put_u32(out, static_cast<std::uint32_t>(v)); }

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  put_bytes(out, s.data(), s.size());
}

struct Reader {
  std::istream& in;

  void bytes(void* p, std::size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n))
      throw MalformedFile("database file truncated");
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > (1u << 20)) throw MalformedFile("unreasonable string length");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
};

}  // namespace

void save_database(const GtDatabase& db, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  put_bytes(out, kMagic, 8);
  put_u32(out, kVersion);
  put_i32(out, db.spec.width);
  put_i32(out, db.spec.height);
  put_f64(out, db.spec.fov_up);
  put_f64(out, db.spec.fov_down);
  for (const auto& bucket : db.by_class) {
    put_u64(out, bucket.size());
    for (const GtObject& obj : bucket) {
      put_f64(out, obj.box.cx);
      put_f64(out, obj.box.cy);
      put_f64(out, obj.box.cz);
      put_f64(out, obj.box.length);
      put_f64(out, obj.box.width);
      put_f64(out, obj.box.height);
      put_f64(out, obj.box.yaw);
      out.put(static_cast<char>(obj.box.label));
      put_i32(out, obj.box.difficulty);
      put_u32(out, static_cast<std::uint32_t>(obj.start_col));
      put_u32(out, static_cast<std::uint32_t>(obj.rangebin.size()));
      for (Eigen::Index i = 0; i < obj.rangebin.size(); ++i)
        put_u32(out, static_cast<std::uint32_t>(obj.rangebin[i]));
      put_str(out, obj.source_frame);
      put_u64(out, static_cast<std::uint64_t>(obj.points.size()));
      for (Eigen::Index i = 0; i < obj.points.size(); ++i)
        for (int c = 0; c < 4; ++c) put_f64(out, obj.points.data(i, c));
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
  out.close();

  std::ofstream index(path.string() + ".index.txt", std::ios::trunc);
  index << "database " << path.filename().string() << "\n";
  index << "format_version " << kVersion << "\n";
  index << "spec.width " << db.spec.width << "\n";
  index << "spec.height " << db.spec.height << "\n";
  index << "spec.fov_up_deg " << rad2deg(db.spec.fov_up) << "\n";
  index << "spec.fov_down_deg " << rad2deg(db.spec.fov_down) << "\n";
  for (int c = 0; c < 3; ++c) {
    const auto cls = static_cast<ClassLabel>(c);
    index << "class " << class_name(cls) << " " << db.objects(cls).size() << "\n";
  }
  index << "total " << db.total() << "\n";
}

GtDatabase load_database(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open database: " + path.string());
  Reader r{in};
  char magic[8];
  r.bytes(magic, 8);
  if (!std::equal(magic, magic + 8, kMagic))
    throw FormatVersionMismatch("not a gt database file: " + path.string());
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw FormatVersionMismatch("unsupported database version " + std::to_string(version));

  GtDatabase db;
  db.spec.width = r.i32();
  db.spec.height = r.i32();
  db.spec.fov_up = r.f64();
  db.spec.fov_down = r.f64();
  if (!db.spec.valid()) throw MalformedFile("database spec invalid");
  for (auto& bucket : db.by_class) {
    const std::uint64_t count = r.u64();
    if (count > (1ull << 24)) throw MalformedFile("unreasonable object count");
    bucket.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) {
      GtObject obj;
      obj.box.cx = r.f64();
      obj.box.cy = r.f64();
      obj.box.cz = r.f64();
      obj.box.length = r.f64();
      obj.box.width = r.f64();
      obj.box.height = r.f64();
      obj.box.yaw = r.f64();
      char label;
      r.bytes(&label, 1);
      obj.box.label = static_cast<ClassLabel>(label);
      obj.box.difficulty = r.i32();
      obj.start_col = static_cast<int>(r.u32());
      const std::uint32_t span = r.u32();
      if (span == 0 || span > (1u << 20)) throw MalformedFile("bad rangebin span");
      obj.rangebin.resize(span);
      for (std::uint32_t i = 0; i < span; ++i) obj.rangebin[i] = static_cast<int>(r.u32());
      obj.source_frame = r.str();
      const std::uint64_t n = r.u64();
      if (n > (1ull << 26)) throw MalformedFile("unreasonable point count");
      obj.points.data.resize(static_cast<Eigen::Index>(n), 4);
      for (Eigen::Index i = 0; i < obj.points.data.rows(); ++i)
        for (int c = 0; c < 4; ++c) obj.points.data(i, c) = r.f64();
      bucket.push_back(std::move(obj));
    }
  }
  return db;
}

}  // namespace caaug
