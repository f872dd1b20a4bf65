#include "uwcl/sensors.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

namespace uwcl {

Eigen::Matrix3d imu_to_camera() {
  Eigen::Matrix3d m;
  // camera x = imu y, camera y = imu z, camera z = imu x
  m << 0, 1, 0,
       0, 0, 1,
       1, 0, 0;
  return m;
}

Eigen::Matrix3d attitude_matrix(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

double wrap_to_pi(double angle) {
  double a = std::fmod(angle + EIGEN_PI, 2.0 * EIGEN_PI);
  if (a < 0) a += 2.0 * EIGEN_PI;
  return a - EIGEN_PI;
}

double wrap_to_two_pi(double angle) {
  double a = std::fmod(angle, 2.0 * EIGEN_PI);
  if (a < 0) a += 2.0 * EIGEN_PI;
  return a;
}

RollPitch attitude_from_accel(const ImuSample& a) {
  const double n = a.accel.norm();
  if (n < 0.5 * kGravity || n > 1.5 * kGravity) {
    throw SensorError(SensorFault::DynamicMotion,
                      "accelerometer magnitude outside quasi-static band");
  }
  RollPitch rp;
  rp.roll = std::atan2(a.accel.y(), a.accel.z());
  rp.pitch = std::atan2(-a.accel.x(),
                        std::hypot(a.accel.y(), a.accel.z()));
  return rp;
}

double yaw_from_mag(const MagSample& m, double roll, double pitch,
                    double declination) {
  const Eigen::Vector3d leveled =
      (Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
       Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX())) *
      m.mag;
  const double horiz = std::hypot(leveled.x(), leveled.y());
  if (horiz < 1e-6 * m.mag.norm()) {
    throw SensorError(SensorFault::VerticalField,
                      "magnetic field has no horizontal component");
  }
  return wrap_to_two_pi(std::atan2(-leveled.y(), leveled.x()) + declination);
}

double relative_depth(const DepthSample& a, const DepthSample& b) {
  return b.depth - a.depth;
}

namespace {

// index of the last sample with time <= t, clamped into [0, n-2]
std::size_t bracket(const std::vector<double>& times, double t) {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0;
  std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
  return std::min(i, times.size() - 2);
}

double lerp_series(const std::vector<double>& times,
                   const std::vector<double>& values, double t) {
  if (times.size() == 1) return values.front();
  const std::size_t i = bracket(times, t);
  const double t0 = times[i], t1 = times[i + 1];
  if (t1 - t0 > SensorLog::kMaxGap) {
    throw SensorError(SensorFault::GapTooLarge,
                      "bracketing samples more than 1 s apart");
  }
  const double f = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
  return values[i] + f * (values[i + 1] - values[i]);
}

double lerp_circular(const std::vector<double>& times,
                     const std::vector<double>& values, double t) {
  if (times.size() == 1) return values.front();
  const std::size_t i = bracket(times, t);
  const double t0 = times[i], t1 = times[i + 1];
  if (t1 - t0 > SensorLog::kMaxGap) {
    throw SensorError(SensorFault::GapTooLarge,
                      "bracketing samples more than 1 s apart");
  }
  const double f = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
  return wrap_to_two_pi(values[i] + f * wrap_to_pi(values[i + 1] - values[i]));
}

void check_span(const std::vector<double>& times, double t) {
  if (times.empty()) {
    throw SensorError(SensorFault::OutOfRange, "empty sensor series");
  }
  if (t < times.front() - SensorLog::kMaxExtrapolation ||
      t > times.back() + SensorLog::kMaxExtrapolation) {
    throw SensorError(SensorFault::OutOfRange,
                      "query time beyond the extrapolation limit");
  }
}

}  // namespace

SensorLog::SensorLog(std::vector<ImuSample> imu, std::vector<MagSample> mag,
                     std::vector<DepthSample> depth, double declination)
    : imu_(std::move(imu)), mag_(std::move(mag)), depth_(std::move(depth)) {
  att_times_.reserve(imu_.size());
  for (const auto& s : imu_) {
    try {
      const RollPitch rp = attitude_from_accel(s);
      att_times_.push_back(s.timestamp);
      rolls_.push_back(rp.roll);
      pitches_.push_back(rp.pitch);
    } catch (const SensorError&) {
      // dynamic-motion sample: skipped for gating
    }
  }
  if (!att_times_.empty()) {
    yaw_times_.reserve(mag_.size());
    for (const auto& s : mag_) {
      if (s.timestamp < att_times_.front() - kMaxExtrapolation ||
          s.timestamp > att_times_.back() + kMaxExtrapolation) {
        continue;
      }
      try {
        const double roll = lerp_series(att_times_, rolls_, s.timestamp);
        const double pitch = lerp_series(att_times_, pitches_, s.timestamp);
        const double yaw = yaw_from_mag(s, roll, pitch, declination);
        yaw_times_.push_back(s.timestamp);
        yaws_.push_back(yaw);
      } catch (const SensorError&) {
        // vertical field or attitude gap: sample unusable
      }
    }
  }
  depth_times_.reserve(depth_.size());
  for (const auto& s : depth_) {
    depth_times_.push_back(s.timestamp);
    depths_.push_back(s.depth);
  }
}

AttitudeEstimate SensorLog::snapshot_at(double t) const {
  AttitudeEstimate e;
  e.timestamp = t;
  check_span(att_times_, t);
  e.roll = wrap_to_pi(lerp_series(att_times_, rolls_, t));
  e.pitch = lerp_series(att_times_, pitches_, t);
  if (!yaw_times_.empty() && t >= yaw_times_.front() - kMaxExtrapolation &&
      t <= yaw_times_.back() + kMaxExtrapolation) {
    e.yaw = lerp_circular(yaw_times_, yaws_, t);
    e.has_yaw = true;
  }
  if (!depth_times_.empty() && t >= depth_times_.front() - kMaxExtrapolation &&
      t <= depth_times_.back() + kMaxExtrapolation) {
    e.depth = lerp_series(depth_times_, depths_, t);
    e.has_depth = true;
  }
  return e;
}

}  // namespace uwcl
