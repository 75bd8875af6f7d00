#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "caaug/gt_database.hpp"
#include "caaug/placement.hpp"
#include "caaug/range_image.hpp"

namespace caaug {

/// Whole-frame transforms applied after insertion and occlusion resolution:
/// mirror flip over the x axis, rotation about z, uniform scale.
struct GlobalAugConfig {
  bool enabled = true;
  double rotation_range = kPi / 4;  ///< rotation drawn uniformly from [-range, range]
  double flip_prob = 0.5;
  double scale_min = 0.95;
  double scale_max = 1.05;
};

struct AugConfig {
  LidarSpec spec;
  double pillar_d = 0.25;
  double pillar_sigma = 0.4;
  PlacementConfig placement;
  SampleCounts samples;
  Strategy strategy = Strategy::Culling;
  int culling_min_points = 4;
  double culling_min_fraction = 0.25;
  GlobalAugConfig global;
  std::uint64_t seed = 0;
};

/// Line-oriented `key = value` text, '#' comments. Unknown keys are an error.
AugConfig parse_config(std::istream& in);
AugConfig parse_config_text(const std::string& text);
AugConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const AugConfig& cfg);

}  // namespace caaug
