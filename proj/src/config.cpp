#include "caaug/config.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

namespace caaug {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + key + ": " + value);
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for " + key + ": " + value);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad unsigned value for " + key + ": " + value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("bad boolean value for " + key + ": " + value);
}

}  // namespace

AugConfig parse_config(std::istream& in) {
  AugConfig cfg;
  bool window_forward = false;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "spec.width") cfg.spec.width = static_cast<int>(parse_int(key, value));
    else if (key == "spec.height") cfg.spec.height = static_cast<int>(parse_int(key, value));
    else if (key == "spec.fov_up") cfg.spec.fov_up = parse_double(key, value);
    else if (key == "spec.fov_down") cfg.spec.fov_down = parse_double(key, value);
    else if (key == "spec.fov_up_deg") cfg.spec.fov_up = deg2rad(parse_double(key, value));
    else if (key == "spec.fov_down_deg") cfg.spec.fov_down = deg2rad(parse_double(key, value));
    else if (key == "pillar.d") cfg.pillar_d = parse_double(key, value);
    else if (key == "pillar.sigma") cfg.pillar_sigma = parse_double(key, value);
    else if (key == "placement.min_rate") cfg.placement.min_rate = parse_double(key, value);
    else if (key == "placement.max_angle_retries") cfg.placement.max_angle_retries = static_cast<int>(parse_int(key, value));
    else if (key == "placement.window") {
      if (value == "full") {
        cfg.placement.azimuth_window.reset();
      } else if (value == "forward") {
        window_forward = true;  // resolved against the final spec below
      } else {
        const auto comma = value.find(',');
        if (comma == std::string::npos) throw ConfigError("placement.window wants 'full' or 'lo,hi'");
        cfg.placement.azimuth_window =
            std::make_pair(static_cast<int>(parse_int(key, trim(value.substr(0, comma)))),
                           static_cast<int>(parse_int(key, trim(value.substr(comma + 1)))));
      }
    } else if (key == "placement.update_validspace") cfg.placement.update_validspace = parse_bool(key, value);
    else if (key == "placement.near_to_far") cfg.placement.near_to_far = parse_bool(key, value);
    else if (key == "placement.wrap_columns") cfg.placement.wrap_columns = parse_bool(key, value);
    else if (key == "placement.rotate") cfg.placement.rotate = parse_bool(key, value);
    else if (key == "placement.collision") {
      if (value == "corners") cfg.placement.collision = CollisionMode::CornerInBox;
      else if (value == "polygon") cfg.placement.collision = CollisionMode::PolygonOverlap;
      else throw ConfigError("placement.collision wants corners|polygon, got " + value);
    } else if (key == "placement.rule") {
      if (value == "unoccluded") cfg.placement.rule = FeasibilityRule::Unoccluded;
      else if (value == "occluded") cfg.placement.rule = FeasibilityRule::Occluded;
      else throw ConfigError("placement.rule wants unoccluded|occluded, got " + value);
    } else if (key == "samples.car") cfg.samples.car = static_cast<int>(parse_int(key, value));
    else if (key == "samples.pedestrian") cfg.samples.pedestrian = static_cast<int>(parse_int(key, value));
    else if (key == "samples.cyclist") cfg.samples.cyclist = static_cast<int>(parse_int(key, value));
    else if (key == "strategy") cfg.strategy = strategy_from_name(value);
    else if (key == "culling.min_points") cfg.culling_min_points = static_cast<int>(parse_int(key, value));
    else if (key == "culling.min_fraction") cfg.culling_min_fraction = parse_double(key, value);
    else if (key == "global.enabled") cfg.global.enabled = parse_bool(key, value);
    else if (key == "global.rotation_range") cfg.global.rotation_range = parse_double(key, value);
    else if (key == "global.flip_prob") cfg.global.flip_prob = parse_double(key, value);
    else if (key == "global.scale_min") cfg.global.scale_min = parse_double(key, value);
    else if (key == "global.scale_max") cfg.global.scale_max = parse_double(key, value);
    else if (key == "seed") cfg.seed = parse_u64(key, value);
    else throw ConfigError("unknown config key: " + key);
  }
  if (!cfg.spec.valid()) throw ConfigError("invalid lidar spec");
  if (window_forward) {
    // the forward camera sector: +-40 degrees of azimuth around +x
    const int half = cfg.spec.width * 40 / 360;
    cfg.placement.azimuth_window = std::make_pair(cfg.spec.width / 2 - half, cfg.spec.width / 2 + half);
  }
  if (cfg.pillar_d <= 0 || cfg.pillar_sigma <= 0) throw ConfigError("pillar.d and pillar.sigma must be positive");
  if (cfg.placement.min_rate < 0 || cfg.placement.min_rate > 1)
    throw ConfigError("placement.min_rate must be in [0, 1]");
  if (cfg.placement.azimuth_window) {
    const auto [lo, hi] = *cfg.placement.azimuth_window;
    if (lo < 0 || hi >= cfg.spec.width || lo > hi) throw ConfigError("placement.window outside the image");
  }
  if (cfg.global.scale_min > cfg.global.scale_max) throw ConfigError("global.scale_min above scale_max");
  return cfg;
}

AugConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

AugConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  return parse_config(in);
}

std::string serialize_config(const AugConfig& cfg) {
  std::ostringstream out;
  out << "spec.width = " << cfg.spec.width << "\n";
  out << "spec.height = " << cfg.spec.height << "\n";
  out << "spec.fov_up = " << fmt(cfg.spec.fov_up) << "\n";
  out << "spec.fov_down = " << fmt(cfg.spec.fov_down) << "\n";
  out << "pillar.d = " << fmt(cfg.pillar_d) << "\n";
  out << "pillar.sigma = " << fmt(cfg.pillar_sigma) << "\n";
  out << "placement.min_rate = " << fmt(cfg.placement.min_rate) << "\n";
  out << "placement.max_angle_retries = " << cfg.placement.max_angle_retries << "\n";
  if (cfg.placement.azimuth_window) {
    out << "placement.window = " << cfg.placement.azimuth_window->first << ","
        << cfg.placement.azimuth_window->second << "\n";
  } else {
    out << "placement.window = full\n";
  }
  out << "placement.update_validspace = " << (cfg.placement.update_validspace ? "true" : "false") << "\n";
  out << "placement.near_to_far = " << (cfg.placement.near_to_far ? "true" : "false") << "\n";
  out << "placement.wrap_columns = " << (cfg.placement.wrap_columns ? "true" : "false") << "\n";
  out << "placement.rotate = " << (cfg.placement.rotate ? "true" : "false") << "\n";
  out << "placement.collision = "
      << (cfg.placement.collision == CollisionMode::CornerInBox ? "corners" : "polygon") << "\n";
  out << "placement.rule = "
      << (cfg.placement.rule == FeasibilityRule::Unoccluded ? "unoccluded" : "occluded") << "\n";
  out << "samples.car = " << cfg.samples.car << "\n";
  out << "samples.pedestrian = " << cfg.samples.pedestrian << "\n";
  out << "samples.cyclist = " << cfg.samples.cyclist << "\n";
  out << "strategy = " << strategy_name(cfg.strategy) << "\n";
  out << "culling.min_points = " << cfg.culling_min_points << "\n";
  out << "culling.min_fraction = " << fmt(cfg.culling_min_fraction) << "\n";
  out << "global.enabled = " << (cfg.global.enabled ? "true" : "false") << "\n";
  out << "global.rotation_range = " << fmt(cfg.global.rotation_range) << "\n";
  out << "global.flip_prob = " << fmt(cfg.global.flip_prob) << "\n";
  out << "global.scale_min = " << fmt(cfg.global.scale_min) << "\n";
  out << "global.scale_max = " << fmt(cfg.global.scale_max) << "\n";
  out << "seed = " << cfg.seed << "\n";
  return out.str();
}

}  // namespace caaug
