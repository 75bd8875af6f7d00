#pragma once

#include <filesystem>

#include "caaug/range_image.hpp"

namespace caaug {

/// Renders the cloud's range image as a binary PPM: brightness falls with
/// range, empty cells are black, inserted points (when the cloud is tagged)
/// are drawn green.
void write_range_ppm(const PointCloud& cloud, const LidarSpec& spec, const std::filesystem::path& out);

}  // namespace caaug
