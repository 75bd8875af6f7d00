#include "caaug/render.hpp"

#include <algorithm>
#include <fstream>
#include <vector>

namespace caaug {

void write_range_ppm(const PointCloud& cloud, const LidarSpec& spec, const std::filesystem::path& out) {
  const RangeImage img = render_range_image(cloud, spec);
  std::vector<unsigned char> rgb(static_cast<std::size_t>(spec.width) * spec.height * 3, 0);

  double max_range = 1.0;
  for (const auto& cell : img.cells)
    if (!cell.empty()) max_range = std::max(max_range, cell.range);

  for (int v = 0; v < spec.height; ++v) {
    for (int u = 0; u < spec.width; ++u) {
      const auto& cell = img.at(u, v);
      if (cell.empty()) continue;
      const std::size_t o = (static_cast<std::size_t>(v) * spec.width + u) * 3;
      const double t = std::clamp(cell.range / max_range, 0.0, 1.0);
      const bool inserted = cloud.tagged() &&
                            cloud.tags[static_cast<std::size_t>(cell.point)].kind == Provenance::Inserted;
      if (inserted) {
        rgb[o + 1] = 255;  // inserted points pop out green
      } else {
        // warm near, cold far
        rgb[o + 0] = static_cast<unsigned char>(255.0 * (1.0 - t));
        rgb[o + 1] = static_cast<unsigned char>(96.0 * (1.0 - t) + 32.0);
        rgb[o + 2] = static_cast<unsigned char>(255.0 * t);
      }
    }
  }

  std::ofstream file(out, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open for writing: " + out.string());
  file << "P6\n" << spec.width << " " << spec.height << "\n255\n";
  file.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
  if (!file) throw IoError("write failed: " + out.string());
}

}  // namespace caaug
