#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace uwcl {

inline constexpr double kGravity = 9.80665;  // m/s^2

enum class SensorFault {
  DynamicMotion,
  VerticalField,
  OutOfRange,
  GapTooLarge,
};

inline const char* to_string(SensorFault f) {
  switch (f) {
    case SensorFault::DynamicMotion: return "DynamicMotion";
    case SensorFault::VerticalField: return "VerticalField";
    case SensorFault::OutOfRange: return "OutOfRange";
    case SensorFault::GapTooLarge: return "GapTooLarge";
  }
  return "Unknown";
}

class SensorError : public std::runtime_error {
 public:
  SensorError(SensorFault fault, const std::string& what)
      : std::runtime_error(std::string(to_string(fault)) + ": " + what),
        fault_(fault) {}
  SensorFault fault() const { return fault_; }

 private:
  SensorFault fault_;
};

/// IMU body convention: x forward, y right, z down at rest. This differs
/// from the camera frame (z forward, x right, y down); the fixed mounting
/// rotation between the two lives in imu_to_camera().
struct ImuSample {
  double timestamp = 0;          ///< seconds, shared synchronized epoch
  Eigen::Vector3d accel = Eigen::Vector3d::Zero();  ///< m/s^2
  Eigen::Vector3d gyro = Eigen::Vector3d::Zero();   ///< rad/s, recorded only
};

struct MagSample {
  double timestamp = 0;
  Eigen::Vector3d mag = Eigen::Vector3d::Zero();  ///< microtesla, body frame
};

struct DepthSample {
  double timestamp = 0;
  double depth = 0;  ///< meters below surface, positive down
};

struct AttitudeEstimate {
  double roll = 0;   ///< rad, (-pi, pi]
  double pitch = 0;  ///< rad, [-pi/2, pi/2]
  double yaw = 0;    ///< rad, [0, 2*pi)
  double depth = 0;  ///< m
  double timestamp = 0;
  bool has_yaw = false;
  bool has_depth = false;
};

struct RollPitch {
  double roll = 0;
  double pitch = 0;
};

/// Fixed rotation from the IMU body frame (x fwd, y right, z down) to the
/// camera frame (x right, y down, z fwd) of the same node.
Eigen::Matrix3d imu_to_camera();

/// Attitude of the IMU body in the world frame (x north, y east, z down)
/// from aerospace Euler angles, R = Rz(yaw) * Ry(pitch) * Rx(roll).
Eigen::Matrix3d attitude_matrix(double roll, double pitch, double yaw);

/// Roll and pitch from a quasi-static accelerometer sample. Throws
/// DynamicMotion when the magnitude leaves [0.5 g, 1.5 g].
RollPitch attitude_from_accel(const ImuSample& a);

/// Tilt-compensated magnetic heading in [0, 2*pi). Throws VerticalField
/// when the leveled horizontal component vanishes.
double yaw_from_mag(const MagSample& m, double roll, double pitch,
                    double declination);

/// Depth of B minus depth of A, positive when B is deeper.
double relative_depth(const DepthSample& a, const DepthSample& b);

double wrap_to_pi(double angle);
double wrap_to_two_pi(double angle);

/// Immutable per-node sensor history with interpolated lookups.
///
/// Roll/pitch come from accelerometer samples (dynamic-motion samples are
/// skipped), yaw from tilt-compensated magnetometer samples, depth from the
/// pressure log. Lookups interpolate linearly (yaw circularly) between
/// bracketing samples and tolerate 0.1 s of clamped extrapolation.
class SensorLog {
 public:
  SensorLog() = default;
  SensorLog(std::vector<ImuSample> imu, std::vector<MagSample> mag,
            std::vector<DepthSample> depth, double declination = 0.0);

  AttitudeEstimate snapshot_at(double t) const;

  bool has_attitude() const { return !att_times_.empty(); }
  bool has_yaw() const { return !yaw_times_.empty(); }
  bool has_depth() const { return !depth_times_.empty(); }
  bool empty() const { return !has_attitude() && !has_depth(); }

  const std::vector<ImuSample>& imu() const { return imu_; }
  const std::vector<MagSample>& mag() const { return mag_; }
  const std::vector<DepthSample>& depth() const { return depth_; }

  static constexpr double kMaxExtrapolation = 0.1;  // s
  static constexpr double kMaxGap = 1.0;            // s

 private:
  std::vector<ImuSample> imu_;
  std::vector<MagSample> mag_;
  std::vector<DepthSample> depth_;

  std::vector<double> att_times_, rolls_, pitches_;
  std::vector<double> yaw_times_, yaws_;
  std::vector<double> depth_times_, depths_;
};

}  // namespace uwcl
