#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "uwcl/geometry.hpp"
#include "uwcl/imaging.hpp"
#include "uwcl/sensors.hpp"

namespace uwcl {

struct ConsistencyTolerance {
  double rel = 0.02;  ///< share of the mean range
  double abs = 0.02;  ///< meters
};

struct GateConfig {
  double yaw_gate = 10.0 * EIGEN_PI / 180.0;       ///< rad
  double depth_gate = 0.3;                         ///< m
  double attitude_gate = 15.0 * EIGEN_PI / 180.0;  ///< rad
  ConsistencyTolerance consistency;
};

/// Outcome of the dual range estimate comparison for one candidate
/// combination.
struct ConsistencyReport {
  double l_from_a = 0;
  double l_from_b = 0;
  double discrepancy = 0;  ///< |l_from_a - l_from_b|
  bool passed = false;
  std::string failure_reason;  ///< degeneracy name when geometry failed
};

/// Full evaluation of one (pair in A, pair in B) combination.
struct GateResult {
  int pair_a = -1;
  int pair_b = -1;
  ConsistencyReport consistency;
  double yaw_residual = 0;
  double depth_residual = 0;
  double attitude_residual = 0;
  bool yaw_checked = false;
  bool depth_checked = false;
  bool attitude_checked = false;
  bool sensors_used = false;  ///< false = degraded, consistency-only mode
  bool accepted = false;
  double score = std::numeric_limits<double>::infinity();
};

struct PoseOutcome {
  std::optional<PoseSolutiond> solution;
  std::string fault;  ///< geometry degeneracy, when solving failed
};

/// solve_relative_pose with degeneracies captured instead of thrown.
PoseOutcome solve_candidate(const PixelPaird& det_a, const PixelPaird& det_b,
                            const CameraIntrinsicsd& k_a,
                            const CameraIntrinsicsd& k_b,
                            const NodeGeometryd& geom_a,
                            const NodeGeometryd& geom_b);

/// Compares the two direction-swapped range estimates; passes iff
/// |l_a - l_b| <= rel * mean + abs. Geometry degeneracies fail the check
/// with the fault recorded.
ConsistencyReport dual_estimate_check(const PixelPaird& pair_a,
                                      const PixelPaird& pair_b,
                                      const CameraIntrinsicsd& k_a,
                                      const CameraIntrinsicsd& k_b,
                                      const NodeGeometryd& geom_a,
                                      const NodeGeometryd& geom_b,
                                      const ConsistencyTolerance& tol = {});

ConsistencyReport consistency_of(const PoseSolutiond& solution,
                                 const ConsistencyTolerance& tol);

/// Sensor-derived residuals of a pose hypothesis against the two nodes'
/// attitude and depth estimates. Missing sensor data degrades the gate to
/// consistency-only mode (sensors_used = false).
GateResult sensor_gate(const PoseSolutiond& solution,
                       const std::optional<AttitudeEstimate>& snap_a,
                       const std::optional<AttitudeEstimate>& snap_b,
                       const GateConfig& cfg);

struct SelectionConfig {
  GateConfig gates;
  bool use_sensors = true;  ///< false = camera-only rejection
};

struct Selection {
  GateResult gate;
  PoseSolutiond solution;
};

/// Evaluates every candidate-pair combination, filters by the dual-estimate
/// check and the sensor gates, and returns the lowest-score acceptance.
/// Ties break deterministically toward the lowest pair indices. Returns
/// nothing when no combination passes. When audit is given, every evaluated
/// combination's GateResult is appended.
std::optional<Selection> select_best_pair(
    const std::vector<MarkerCandidate>& cands_a,
    const std::vector<CandidatePair>& pairs_a,
    const std::vector<MarkerCandidate>& cands_b,
    const std::vector<CandidatePair>& pairs_b,
    const std::optional<AttitudeEstimate>& snap_a,
    const std::optional<AttitudeEstimate>& snap_b,
    const CameraIntrinsicsd& k_a, const CameraIntrinsicsd& k_b,
    const NodeGeometryd& geom_a, const NodeGeometryd& geom_b,
    const SelectionConfig& cfg, std::vector<GateResult>* audit = nullptr);

}  // namespace uwcl
