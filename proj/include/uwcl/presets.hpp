#pragma once

#include <optional>
#include <string>
#include <vector>

#include "uwcl/imaging.hpp"

namespace uwcl {

/// Detection settings per test-environment class. Threshold values are
/// environment-tuned defaults, selected by name and overridable per run;
/// selection is never automatic.
std::optional<DetectionConfig> environment_preset(const std::string& name);

std::vector<std::string> preset_names();

}  // namespace uwcl
