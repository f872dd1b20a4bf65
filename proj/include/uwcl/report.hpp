#pragma once

#include <filesystem>
#include <vector>

#include "uwcl/dataset.hpp"
#include "uwcl/simulator.hpp"

namespace uwcl {

struct FrameError {
  double timestamp = 0;
  double position_error = 0;   ///< m
  double rotation_error = 0;   ///< rad, geodesic
  double distance_error = 0;   ///< |range_est - range_true|, m
  double range_true = 0;
};

struct RangeBin {
  double range_lo = 0;
  double range_hi = 0;
  double mean_abs_distance_error = 0;
  int count = 0;
};

struct EvalReport {
  std::vector<FrameError> frames;  ///< matched valid frames, time order
  std::vector<RangeBin> bins;
  double mean_position_error = 0;
  double max_position_error = 0;
  double mean_rotation_error = 0;
  double mean_abs_distance_error = 0;
  int matched = 0;
  int unmatched_estimates = 0;
};

/// Per-frame errors of an estimated trajectory against ground truth,
/// aligned by timestamp. Throws MismatchedTimestamps when no valid
/// estimate aligns with any truth record.
EvalReport evaluate_trajectory(const std::vector<TrajectoryRecord>& estimate,
                               const std::vector<TrajectoryRecord>& truth,
                               double align_tolerance = 1e-3,
                               double bin_width = 0.5);

void write_eval_csv(const EvalReport& report, const std::filesystem::path& path);

/// Error-vs-range polyline with an optional dashed reference level.
void write_error_curve_svg(const std::vector<RangeBin>& bins,
                           double reference_level,
                           const std::filesystem::path& path);

void write_spacing_csv(const std::vector<SpacingCell>& cells,
                       const std::filesystem::path& path);

/// d x range grid of RMS range error as a shaded-cell chart.
void write_spacing_svg(const std::vector<SpacingCell>& cells,
                       const std::filesystem::path& path);

}  // namespace uwcl
