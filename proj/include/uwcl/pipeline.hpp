#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uwcl/dataset.hpp"
#include "uwcl/presets.hpp"
#include "uwcl/rejection.hpp"

namespace uwcl {

struct SolveOptions {
  bool use_sensors = true;
  GateConfig gates;
  std::optional<DetectionConfig> detection_override;  ///< else manifest preset
  double sync_tolerance = -1;  ///< seconds; negative = manifest value
  double match_radius_px = 3.0;  ///< truth-pixel match radius (rendered mode)
};

struct FrameOutcome {
  double t_a = 0;
  double t_b = 0;
  std::string status;  ///< "solved" or a skip reason
  std::optional<TrajectoryRecord> record;
  std::optional<GateResult> chosen;
  bool truth_known = false;
  bool correct_selection = false;
  std::vector<GateResult> audit;
};

struct SolveRunSummary {
  int frames_a = 0;
  int frames_b = 0;
  int paired = 0;
  int solved = 0;
  int skipped = 0;
  std::map<std::string, int> skip_reasons;
  int truth_frames = 0;         ///< paired frames with known true pair
  int correct_selections = 0;   ///< chosen pair matches the true pair
  std::vector<TrajectoryRecord> trajectory;  ///< one per paired frame
};

/// Runs detection (or consumes stored detections), outlier rejection, and
/// the pose solve over every time-aligned frame pair of the dataset.
/// Per-frame failures are recorded, never fatal.
SolveRunSummary solve_dataset(const Dataset& ds, const SolveOptions& opts,
                              std::vector<FrameOutcome>* per_frame = nullptr);

}  // namespace uwcl
