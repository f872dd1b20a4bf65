#include "uwcl/presets.hpp"

namespace uwcl {

namespace {

DetectionConfig make(double val_min, double sat_max, int min_area,
                     int close_radius) {
  DetectionConfig cfg;
  cfg.threshold.hue_min = 0;
  cfg.threshold.hue_max = 360;
  cfg.threshold.sat_min = 0;
  cfg.threshold.sat_max = sat_max;
  cfg.threshold.val_min = val_min;
  cfg.threshold.val_max = 1.0;
  cfg.min_area = min_area;
  cfg.close_radius = close_radius;
  return cfg;
}

}  // namespace

std::optional<DetectionConfig> environment_preset(const std::string& name) {
  // dive lights are bright and nearly white; presets differ mainly in how
  // much ambient light must be cut
  if (name == "cave_night") return make(0.35, 0.65, 9, 2);
  if (name == "clear_night") return make(0.40, 0.65, 9, 2);
  if (name == "turbid_day") return make(0.55, 0.55, 12, 2);
  if (name == "clear_day") return make(0.65, 0.50, 12, 2);
  return std::nullopt;
}

std::vector<std::string> preset_names() {
  return {"cave_night", "clear_night", "turbid_day", "clear_day"};
}

}  // namespace uwcl
