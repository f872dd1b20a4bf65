#pragma once

// Reference constructions for tests: scenes built from first principles and
// measured quantities derived by brute-force vector geometry, independent of
// the solver code paths they check.

#include <random>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "uwcl/geometry.hpp"

namespace testutil {

using Eigen::Matrix3d;
using Eigen::Quaterniond;
using Eigen::Vector3d;

struct Scene {
  Vector3d t;    // position of C_B in A's camera frame
  Matrix3d rot;  // B camera frame -> A camera frame
  double d_a = 0.88;
  double d_b = 0.88;
};

struct Observation {
  // bearings to the other node's physical left/right landmarks
  Vector3d uL, uR;  // from A, in A frame
  Vector3d vL, vR;  // from B, in B frame
  // the same bearings ordered as an image would label them
  uwcl::BearingPaird obs_a, obs_b;
};

inline Matrix3d rot_x(double a) {
  return Eigen::AngleAxisd(a, Vector3d::UnitX()).toRotationMatrix();
}
inline Matrix3d rot_y(double a) {
  return Eigen::AngleAxisd(a, Vector3d::UnitY()).toRotationMatrix();
}
inline Matrix3d rot_z(double a) {
  return Eigen::AngleAxisd(a, Vector3d::UnitZ()).toRotationMatrix();
}

// camera orientation with optical axis along fwd and x as horizontal as the
// A-frame allows (A-frame y treated as down)
inline Matrix3d look_rotation(const Vector3d& fwd) {
  const Vector3d z = fwd.normalized();
  Vector3d x = Vector3d(0, 1, 0).cross(z);
  if (x.norm() < 1e-9) x = Vector3d(1, 0, 0);
  x.normalize();
  const Vector3d y = z.cross(x);
  Matrix3d r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

inline Scene random_scene(std::mt19937_64& rng, double d_min = 0.57,
                          double d_max = 0.88, double range_min = 0.5,
                          double range_max = 10.0) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Scene s;
  const double l = range_min + (range_max - range_min) * uni(rng);
  const double theta = uni(rng) * 35.0 * EIGEN_PI / 180.0;
  const double phi = uni(rng) * 2.0 * EIGEN_PI;
  const Vector3d dir(std::sin(theta) * std::cos(phi),
                     std::sin(theta) * std::sin(phi), std::cos(theta));
  s.t = l * dir;
  const Matrix3d pert = rot_z((uni(rng) - 0.5) * 1.0) *
                        rot_y((uni(rng) - 0.5) * 0.8) *
                        rot_x((uni(rng) - 0.5) * 0.8);
  s.rot = look_rotation(-dir) * pert;
  s.d_a = d_min + (d_max - d_min) * uni(rng);
  s.d_b = s.d_a;
  return s;
}

inline Observation observe(const Scene& s) {
  Observation o;
  const Vector3d r1 = s.rot.col(0);  // B's landmark axis in A frame
  const Vector3d lb = s.t - 0.5 * s.d_b * r1;
  const Vector3d rb = s.t + 0.5 * s.d_b * r1;
  o.uL = lb.normalized();
  o.uR = rb.normalized();
  const Vector3d la(-0.5 * s.d_a, 0, 0);
  const Vector3d ra(0.5 * s.d_a, 0, 0);
  o.vL = (s.rot.transpose() * (la - s.t)).normalized();
  o.vR = (s.rot.transpose() * (ra - s.t)).normalized();

  const auto image_order = [](const Vector3d& p, const Vector3d& q) {
    return (p.x() / p.z() <= q.x() / q.z()) ? uwcl::BearingPaird{p, q}
                                            : uwcl::BearingPaird{q, p};
  };
  o.obs_a = image_order(o.uL, o.uR);
  o.obs_b = image_order(o.vL, o.vR);
  return o;
}

// exact subtended angle at C_B of A's landmark baseline
inline double exact_alpha_from_b(const Scene& s) {
  const Vector3d la(-0.5 * s.d_a, 0, 0);
  const Vector3d ra(0.5 * s.d_a, 0, 0);
  const Vector3d v1 = la - s.t;
  const Vector3d v2 = ra - s.t;
  return std::acos(std::clamp(v1.dot(v2) / (v1.norm() * v2.norm()), -1.0, 1.0));
}

// exact off-axis angle of the sight line measured in the plane through A's
// landmark baseline and C_B (the angle the closed form is exact for)
inline double exact_beta_at_a(const Scene& s) {
  const Vector3d u = s.t.normalized();
  return std::asin(std::clamp(std::abs(u.x()), 0.0, 1.0));
}

// rotation angle via the quaternion chord; resolves far below the
// precision floor of acos(dot)
inline double quat_angle(const Quaterniond& a, const Quaterniond& b) {
  const double chord = std::min((a.coeffs() - b.coeffs()).norm(),
                                (a.coeffs() + b.coeffs()).norm());
  return 4.0 * std::asin(std::clamp(chord / 2.0, 0.0, 1.0));
}

}  // namespace testutil
