#include "uwcl/rejection.hpp"

#include <cmath>

#include <Eigen/Geometry>

namespace uwcl {

PoseOutcome solve_candidate(const PixelPaird& det_a, const PixelPaird& det_b,
                            const CameraIntrinsicsd& k_a,
                            const CameraIntrinsicsd& k_b,
                            const NodeGeometryd& geom_a,
                            const NodeGeometryd& geom_b) {
  PoseOutcome out;
  try {
    out.solution = solve_relative_pose<double>(det_a, det_b, k_a, k_b,
                                               geom_a, geom_b);
  } catch (const GeometryError& e) {
    out.fault = to_string(e.fault());
  }
  return out;
}

ConsistencyReport consistency_of(const PoseSolutiond& solution,
                                 const ConsistencyTolerance& tol) {
  ConsistencyReport rep;
  rep.l_from_a = solution.range_from_a;
  rep.l_from_b = solution.range_from_b;
  rep.discrepancy = std::abs(rep.l_from_a - rep.l_from_b);
  const double mean = 0.5 * (rep.l_from_a + rep.l_from_b);
  rep.passed = rep.discrepancy <= tol.rel * mean + tol.abs;
  return rep;
}

ConsistencyReport dual_estimate_check(const PixelPaird& pair_a,
                                      const PixelPaird& pair_b,
                                      const CameraIntrinsicsd& k_a,
                                      const CameraIntrinsicsd& k_b,
                                      const NodeGeometryd& geom_a,
                                      const NodeGeometryd& geom_b,
                                      const ConsistencyTolerance& tol) {
  const PoseOutcome outcome =
      solve_candidate(pair_a, pair_b, k_a, k_b, geom_a, geom_b);
  if (!outcome.solution) {
    ConsistencyReport rep;
    rep.passed = false;
    rep.failure_reason = outcome.fault;
    return rep;
  }
  return consistency_of(*outcome.solution, tol);
}

namespace {

// relative yaw implied by a camera-frame pose given both nodes' roll/pitch
double implied_relative_yaw(const Eigen::Matrix3d& pose_rot,
                            const AttitudeEstimate& a,
                            const AttitudeEstimate& b) {
  const Eigen::Matrix3d m = imu_to_camera();
  const Eigen::Matrix3d s = m.transpose() * pose_rot * m;  // imu B -> imu A
  const Eigen::Matrix3d z =
      (Eigen::AngleAxisd(a.pitch, Eigen::Vector3d::UnitY()) *
       Eigen::AngleAxisd(a.roll, Eigen::Vector3d::UnitX()))
          .toRotationMatrix() *
      s *
      (Eigen::AngleAxisd(-b.roll, Eigen::Vector3d::UnitX()) *
       Eigen::AngleAxisd(-b.pitch, Eigen::Vector3d::UnitY()))
          .toRotationMatrix();
  return std::atan2(z(1, 0), z(0, 0));
}

}  // namespace

GateResult sensor_gate(const PoseSolutiond& solution,
                       const std::optional<AttitudeEstimate>& snap_a,
                       const std::optional<AttitudeEstimate>& snap_b,
                       const GateConfig& cfg) {
  GateResult r;
  r.consistency = consistency_of(solution, cfg.consistency);

  if (!snap_a || !snap_b) {
    // degraded mode: no sensor data to gate with
    r.sensors_used = false;
    r.accepted = r.consistency.passed;
    return r;
  }
  r.sensors_used = true;

  const Eigen::Matrix3d pose_rot = solution.pose.rotation.toRotationMatrix();
  const Eigen::Matrix3d m = imu_to_camera();

  if (snap_a->has_yaw && snap_b->has_yaw) {
    const double implied = implied_relative_yaw(pose_rot, *snap_a, *snap_b);
    const double sensed = wrap_to_pi(snap_b->yaw - snap_a->yaw);
    r.yaw_residual = std::abs(wrap_to_pi(implied - sensed));
    r.yaw_checked = true;
  }

  if (snap_a->has_depth && snap_b->has_depth) {
    // world-down in A's camera frame from A's roll/pitch
    const Eigen::Vector3d down_imu_a =
        (Eigen::AngleAxisd(-snap_a->roll, Eigen::Vector3d::UnitX()) *
         Eigen::AngleAxisd(-snap_a->pitch, Eigen::Vector3d::UnitY())) *
        Eigen::Vector3d(0, 0, 1);
    const Eigen::Vector3d down_cam_a = m * down_imu_a;
    const double implied_dz = solution.pose.translation.dot(down_cam_a);
    const double sensed_dz = snap_b->depth - snap_a->depth;
    r.depth_residual = std::abs(implied_dz - sensed_dz);
    r.depth_checked = true;
  }

  if (snap_a->has_yaw && snap_b->has_yaw) {
    const Eigen::Matrix3d r_wi_a =
        attitude_matrix(snap_a->roll, snap_a->pitch, snap_a->yaw);
    const Eigen::Matrix3d r_wi_b =
        attitude_matrix(snap_b->roll, snap_b->pitch, snap_b->yaw);
    const Eigen::Matrix3d sensor_pose = m * r_wi_a.transpose() * r_wi_b * m.transpose();
    r.attitude_residual = geodesic_angle(solution.pose.rotation,
                                         Eigen::Quaterniond(sensor_pose));
    r.attitude_checked = true;
  }

  r.accepted = r.consistency.passed &&
               (!r.yaw_checked || r.yaw_residual <= cfg.yaw_gate) &&
               (!r.depth_checked || r.depth_residual <= cfg.depth_gate) &&
               (!r.attitude_checked || r.attitude_residual <= cfg.attitude_gate);
  return r;
}

std::optional<Selection> select_best_pair(
    const std::vector<MarkerCandidate>& cands_a,
    const std::vector<CandidatePair>& pairs_a,
    const std::vector<MarkerCandidate>& cands_b,
    const std::vector<CandidatePair>& pairs_b,
    const std::optional<AttitudeEstimate>& snap_a,
    const std::optional<AttitudeEstimate>& snap_b,
    const CameraIntrinsicsd& k_a, const CameraIntrinsicsd& k_b,
    const NodeGeometryd& geom_a, const NodeGeometryd& geom_b,
    const SelectionConfig& cfg, std::vector<GateResult>* audit) {
  std::optional<Selection> best;
  for (std::size_t ia = 0; ia < pairs_a.size(); ++ia) {
    const PixelPaird det_a{cands_a[pairs_a[ia].left].position,
                           cands_a[pairs_a[ia].right].position};
    for (std::size_t ib = 0; ib < pairs_b.size(); ++ib) {
      const PixelPaird det_b{cands_b[pairs_b[ib].left].position,
                             cands_b[pairs_b[ib].right].position};
      GateResult gate;
      gate.pair_a = static_cast<int>(ia);
      gate.pair_b = static_cast<int>(ib);

      const PoseOutcome outcome =
          solve_candidate(det_a, det_b, k_a, k_b, geom_a, geom_b);
      if (!outcome.solution) {
        gate.consistency.passed = false;
        gate.consistency.failure_reason = outcome.fault;
        if (audit) audit->push_back(gate);
        continue;
      }
      if (cfg.use_sensors) {
        gate = sensor_gate(*outcome.solution, snap_a, snap_b, cfg.gates);
      } else {
        gate.consistency = consistency_of(*outcome.solution,
                                          cfg.gates.consistency);
        gate.sensors_used = false;
        gate.accepted = gate.consistency.passed;
      }
      gate.pair_a = static_cast<int>(ia);
      gate.pair_b = static_cast<int>(ib);

      if (gate.accepted) {
        const double mean =
            0.5 * (gate.consistency.l_from_a + gate.consistency.l_from_b);
        double score = mean > 0 ? gate.consistency.discrepancy / mean : 0.0;
        if (gate.yaw_checked) score += gate.yaw_residual / cfg.gates.yaw_gate;
        if (gate.depth_checked) {
          score += gate.depth_residual / cfg.gates.depth_gate;
        }
        gate.score = score;
        if (!best || score < best->gate.score) {
          best = Selection{gate, *outcome.solution};
        }
      }
      if (audit) audit->push_back(gate);
    }
  }
  return best;
}

}  // namespace uwcl
