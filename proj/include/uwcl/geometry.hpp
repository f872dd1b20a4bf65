#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "uwcl/camera.hpp"

namespace uwcl {

template <typename Scalar>
using Quat = Eigen::Quaternion<Scalar>;

inline constexpr double kDegeneracyTol = 1e-9;

/// Placement of the two landmark lights relative to the camera, in the
/// camera frame. The default arrangement is collinear with and symmetric
/// about the camera center, along the camera x axis.
template <typename Scalar>
struct NodeGeometry {
  Scalar d = Scalar(0);  ///< baseline between left and right landmark, m
  Vec3<Scalar> left_offset = Vec3<Scalar>::Zero();
  Vec3<Scalar> right_offset = Vec3<Scalar>::Zero();

  static NodeGeometry symmetric(Scalar baseline) {
    NodeGeometry g;
    g.d = baseline;
    g.left_offset = Vec3<Scalar>(-baseline / Scalar(2), Scalar(0), Scalar(0));
    g.right_offset = Vec3<Scalar>(baseline / Scalar(2), Scalar(0), Scalar(0));
    return g;
  }

  /// Unit direction from the left to the right landmark.
  Vec3<Scalar> baseline_axis() const {
    return (right_offset - left_offset).normalized();
  }
};

using NodeGeometryd = NodeGeometry<double>;

/// The two angles entering the closed-form range expression.
template <typename Scalar>
struct AnglePair {
  Scalar alpha = Scalar(0);  ///< angle subtended by the other node's landmarks
  Scalar beta = Scalar(0);   ///< angle off the optical axis to the other camera
};

using AnglePaird = AnglePair<double>;

/// Rigid transform of node B's camera frame expressed in node A's camera
/// frame: x_A = rotation * x_B + translation.
template <typename Scalar>
struct RelativePose {
  Quat<Scalar> rotation = Quat<Scalar>::Identity();  ///< qw >= 0
  Vec3<Scalar> translation = Vec3<Scalar>::Zero();   ///< C_B in A frame, m
  Scalar range = Scalar(0);                          ///< translation.norm()
};

using RelativePosed = RelativePose<double>;

/// A pair of bearings ordered by image position (left = smaller u after
/// roll compensation).
template <typename Scalar>
struct BearingPair {
  Vec3<Scalar> left;
  Vec3<Scalar> right;
};

using BearingPaird = BearingPair<double>;

template <typename Scalar>
struct PixelPair {
  PixelPoint<Scalar> left;
  PixelPoint<Scalar> right;
};

using PixelPaird = PixelPair<double>;

/// Angle between two unit bearings, in [0, pi].
template <typename Scalar>
Scalar subtended_angle(const Vec3<Scalar>& b1, const Vec3<Scalar>& b2) {
  return std::acos(std::clamp(b1.dot(b2), Scalar(-1), Scalar(1)));
}

/// Unit direction bisecting two bearings; approximates the direction to the
/// point midway between the two observed landmarks.
template <typename Scalar>
Vec3<Scalar> midpoint_direction(const Vec3<Scalar>& bL, const Vec3<Scalar>& bR) {
  const Vec3<Scalar> sum = bL + bR;
  const Scalar n = sum.norm();
  if (n < Scalar(kDegeneracyTol)) {
    throw GeometryError(GeometryFault::DegenerateMidpoint,
                        "bearings are antipodal");
  }
  return sum / n;
}

/// Angle between the optical axis (0,0,1) and the bisector of the two
/// bearings to the other node's landmarks.
template <typename Scalar>
Scalar baseline_angle(const Vec3<Scalar>& bL, const Vec3<Scalar>& bR) {
  const Vec3<Scalar> m = midpoint_direction(bL, bR);
  return std::acos(std::clamp(m.z(), Scalar(-1), Scalar(1)));
}

/// Closed-form inter-camera distance from the subtended angle alpha (seen
/// from the other camera) and the off-axis angle beta (seen from this one),
/// for a landmark baseline of length d centered on the camera:
///
///   l = d / (2 sin a) * (cos a cos b + sqrt(1 - cos^2 a sin^2 b))
template <typename Scalar>
Scalar range_closed_form(Scalar d, const AnglePair<Scalar>& angles) {
  const Scalar sa = std::sin(angles.alpha);
  if (sa < Scalar(kDegeneracyTol)) {
    throw GeometryError(GeometryFault::DegenerateAlpha,
                        "landmarks visually coincident or antipodal");
  }
  const Scalar ca = std::cos(angles.alpha);
  const Scalar cb = std::cos(angles.beta);
  const Scalar sb = std::sin(angles.beta);
  const Scalar disc = Scalar(1) - ca * ca * sb * sb;
  return d / (Scalar(2) * sa) * (ca * cb + std::sqrt(std::max(disc, Scalar(0))));
}

/// Mean of the two direction-swapped range estimates.
template <typename Scalar>
Scalar range_averaged(Scalar l_from_a, Scalar l_from_b) {
  return (l_from_a + l_from_b) / Scalar(2);
}

/// Extends a unit bearing to length l.
template <typename Scalar>
Vec3<Scalar> position_from_range(const Vec3<Scalar>& bearing, Scalar l) {
  return l * bearing;
}

/// One camera's landmark-pair reconstruction: position of the other camera
/// and orientation of its landmark axis, in the observing camera's frame.
template <typename Scalar>
struct SideReconstruction {
  Scalar range = Scalar(0);        ///< distance to the other camera, m
  Vec3<Scalar> direction;          ///< unit direction to the other camera
  Vec3<Scalar> other_baseline;     ///< unit left->right landmark axis
  Scalar dist_left = Scalar(0);    ///< distance to the observed left landmark
  Scalar dist_right = Scalar(0);   ///< distance to the observed right landmark
  Scalar residual = Scalar(0);     ///< inscribed-angle residual, dimensionless
};

namespace detail {

// Scalarized inscribed-angle constraint along the one-parameter family of
// triangles consistent with one image.
//
// The observer sees the other node's two landmarks (separation d_far) along
// unit bearings uL, uR. Every interior angle lam at the far left landmark
// determines the triangle up to congruence (law of sines), hence candidate
// landmark distances sL, sR and a candidate camera position w = midpoint.
// The true lam is pinned by the other image: the inscribed angle at w
// subtending the observer's own baseline (length d_near, axis through the
// camera center) must equal alpha_far, the angle measured by the other
// camera. T(lam) below is that constraint as a signed residual.
template <typename Scalar>
struct SideProblem {
  // constants
  Scalar ca;          // cos of the locally measured subtended angle
  Scalar sa;          // sin of same
  Scalar k;           // d_far / sa
  Scalar aL, aR;      // bearing components along the observer baseline axis
  Scalar cAB;         // uL . uR ( == ca, kept for clarity of W )
  Scalar h;           // d_near / 2
  Scalar c_far;       // cos alpha_far

  struct Eval {
    Scalar t;    // constraint value
    Scalar dt;   // d t / d lam
    Scalar tn;   // normalized value: cos(angle at w) - cos(alpha_far)
    Scalar sL, sR;
  };

  Eval eval(Scalar lam) const {
    const Scalar sl = std::sin(lam);
    const Scalar cl = std::cos(lam);
    const Scalar sL = k * (sa * cl + ca * sl);
    const Scalar sR = k * sl;
    const Scalar dsL = k * (ca * cl - sa * sl);
    const Scalar dsR = k * cl;

    const Scalar W = Scalar(0.25) * (sL * sL + sR * sR + Scalar(2) * sL * sR * cAB);
    const Scalar dW = Scalar(0.5) * (sL * dsL + sR * dsR + cAB * (dsL * sR + sL * dsR));
    const Scalar X = Scalar(0.5) * (sL * aL + sR * aR);
    const Scalar dX = Scalar(0.5) * (dsL * aL + dsR * aR);

    const Scalar P = W + h * h;
    const Scalar Q = std::max(P * P - Scalar(4) * h * h * X * X, Scalar(0));
    const Scalar sq = std::sqrt(Q);
    const Scalar dQ = Scalar(2) * P * dW - Scalar(8) * h * h * X * dX;

    Eval e;
    e.sL = sL;
    e.sR = sR;
    e.t = (W - h * h) - c_far * sq;
    e.dt = dW - (sq > Scalar(0) ? c_far * dQ / (Scalar(2) * sq) : Scalar(0));
    e.tn = sq > Scalar(0) ? (W - h * h) / sq - c_far : Scalar(0);
    return e;
  }
};

// Illinois-damped regula falsi on f over an ordered sign-changing bracket.
template <typename Scalar, typename F>
Scalar falsi(const F& f, Scalar lo, Scalar hi, Scalar flo, Scalar fhi) {
  int last = 0;
  for (int it = 0; it < 200 && hi - lo > Scalar(4e-16) * (Scalar(1) + std::abs(lo) + std::abs(hi)); ++it) {
    const Scalar denom = fhi - flo;
    Scalar c = denom != Scalar(0) ? (lo * fhi - hi * flo) / denom
                                  : Scalar(0.5) * (lo + hi);
    if (!(c > lo && c < hi)) c = Scalar(0.5) * (lo + hi);
    const Scalar fc = f(c);
    if (fc == Scalar(0)) return c;
    if ((fc < Scalar(0)) == (flo < Scalar(0))) {
      lo = c;
      flo = fc;
      if (last == -1) fhi *= Scalar(0.5);
      last = -1;
    } else {
      hi = c;
      fhi = fc;
      if (last == 1) flo *= Scalar(0.5);
      last = 1;
    }
  }
  return Scalar(0.5) * (lo + hi);
}

}  // namespace detail

/// Reconstructs the other camera's position and landmark axis from one
/// image. uL/uR are this camera's unit bearings to the other node's
/// physical left/right landmarks (separation d_far); alpha_far is the
/// subtended angle measured by the other camera of this node's baseline
/// (length d_near, unit axis baseline_axis in this camera's frame).
///
/// Returns every geometrically consistent interpretation (typically one or
/// two); callers disambiguate against the opposite side. Tangent solutions
/// of the constraint are located through its derivative, so noise-free
/// inputs reconstruct to machine precision even when the constraint does
/// not change sign.
template <typename Scalar>
std::vector<SideReconstruction<Scalar>> reconstruct_side(
    const Vec3<Scalar>& uL, const Vec3<Scalar>& uR,
    const Vec3<Scalar>& baseline_axis, Scalar d_near, Scalar d_far,
    Scalar alpha_far) {
  const Scalar cAB = std::clamp(uL.dot(uR), Scalar(-1), Scalar(1));
  const Scalar alpha_near = std::acos(cAB);
  const Scalar sa = std::sin(alpha_near);
  if (sa < Scalar(kDegeneracyTol) || std::sin(alpha_far) < Scalar(kDegeneracyTol)) {
    throw GeometryError(GeometryFault::DegenerateAlpha,
                        "landmarks visually coincident or antipodal");
  }

  detail::SideProblem<Scalar> prob;
  prob.ca = cAB;
  prob.sa = sa;
  prob.k = d_far / sa;
  prob.aL = uL.dot(baseline_axis);
  prob.aR = uR.dot(baseline_axis);
  prob.cAB = cAB;
  prob.h = d_near / Scalar(2);
  prob.c_far = std::cos(alpha_far);

  const auto t_of = [&prob](Scalar lam) { return prob.eval(lam).t; };
  const auto dt_of = [&prob](Scalar lam) { return prob.eval(lam).dt; };

  const Scalar lam_max = Scalar(EIGEN_PI) - alpha_near;
  constexpr int kGrid = 48;
  const Scalar margin = Scalar(1e-9);
  std::array<Scalar, kGrid> xs, ts, dts;
  for (int i = 0; i < kGrid; ++i) {
    xs[i] = margin + (lam_max - Scalar(2) * margin) * Scalar(i) / Scalar(kGrid - 1);
    const auto e = prob.eval(xs[i]);
    ts[i] = e.t;
    dts[i] = e.dt;
  }

  // tangent interpretations are admitted up to this normalized mismatch;
  // downstream consistency checks judge them further
  const Scalar tangency_tol = Scalar(0.02);

  std::vector<Scalar> lams;
  lams.reserve(4);
  for (int i = 0; i + 1 < kGrid; ++i) {
    const bool t_flip = (ts[i] < Scalar(0)) != (ts[i + 1] < Scalar(0));
    const bool dt_flip = (dts[i] < Scalar(0)) != (dts[i + 1] < Scalar(0));
    if (t_flip) {
      lams.push_back(detail::falsi(t_of, xs[i], xs[i + 1], ts[i], ts[i + 1]));
    } else if (dt_flip) {
      // extremum inside the interval: either a pair of transversal roots
      // hiding between samples, or a tangent root
      const Scalar pk = detail::falsi(dt_of, xs[i], xs[i + 1], dts[i], dts[i + 1]);
      const auto pe = prob.eval(pk);
      const bool is_max = dts[i] > Scalar(0);
      if (is_max && ts[i] < Scalar(0) && pe.t > Scalar(0)) {
        lams.push_back(detail::falsi(t_of, xs[i], pk, ts[i], pe.t));
        lams.push_back(detail::falsi(t_of, pk, xs[i + 1], pe.t, ts[i + 1]));
      } else if (!is_max && ts[i] > Scalar(0) && pe.t < Scalar(0)) {
        lams.push_back(detail::falsi(t_of, xs[i], pk, ts[i], pe.t));
        lams.push_back(detail::falsi(t_of, pk, xs[i + 1], pe.t, ts[i + 1]));
      } else if (std::abs(pe.tn) < tangency_tol) {
        lams.push_back(pk);
      }
    }
  }

  std::vector<SideReconstruction<Scalar>> out;
  out.reserve(lams.size());
  for (const Scalar lam : lams) {
    const auto e = prob.eval(lam);
    if (!(e.sL > Scalar(0)) || !(e.sR > Scalar(0))) continue;
    const Vec3<Scalar> w = Scalar(0.5) * (e.sL * uL + e.sR * uR);
    const Scalar l = w.norm();
    if (!(l > Scalar(0))) continue;
    SideReconstruction<Scalar> r;
    r.range = l;
    r.direction = w / l;
    r.other_baseline = (e.sR * uR - e.sL * uL) / d_far;
    r.dist_left = e.sL;
    r.dist_right = e.sR;
    r.residual = std::abs(e.tn);
    // drop near-duplicates
    bool dup = false;
    for (const auto& prev : out) {
      if (std::abs(prev.range - r.range) <=
          Scalar(1e-12) * std::max(Scalar(1), r.range)) {
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(r);
  }
  return out;
}

namespace detail {

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> triad_frame(const Vec3<Scalar>& primary,
                                        const Vec3<Scalar>& secondary) {
  const Vec3<Scalar> e1 = primary.normalized();
  Vec3<Scalar> c = primary.cross(secondary);
  const Scalar n = c.norm();
  if (n < Scalar(kDegeneracyTol)) {
    throw GeometryError(GeometryFault::DegeneratePlane,
                        "frame vectors are collinear");
  }
  const Vec3<Scalar> e2 = c / n;
  Eigen::Matrix<Scalar, 3, 3> m;
  m.col(0) = e1;
  m.col(1) = e2;
  m.col(2) = e1.cross(e2);
  return m;
}

// Rotation taking b-frame vectors to a-frame vectors; exact on the primary
// pair, least-twist on the secondary.
template <typename Scalar>
Quat<Scalar> triad_rotation(const Vec3<Scalar>& b1, const Vec3<Scalar>& a1,
                            const Vec3<Scalar>& b2, const Vec3<Scalar>& a2) {
  const Eigen::Matrix<Scalar, 3, 3> r =
      triad_frame(a1, a2) * triad_frame(b1, b2).transpose();
  return Quat<Scalar>(r);
}

template <typename Scalar>
Quat<Scalar> sign_aligned_mean(const Quat<Scalar>& q1, const Quat<Scalar>& q2) {
  Eigen::Matrix<Scalar, 4, 1> c1 = q1.coeffs();
  Eigen::Matrix<Scalar, 4, 1> c2 = q2.coeffs();
  if (c1.dot(c2) < Scalar(0)) c2 = -c2;
  Eigen::Matrix<Scalar, 4, 1> m = (c1 + c2).normalized();
  if (m[3] < Scalar(0)) m = -m;  // scalar part >= 0
  return Quat<Scalar>(m);
}

// Rotation from the two reconstructed sides. Two TRIAD constructions share
// the exact sight-line pair; their plane constraints come one from each
// image. The results are averaged as sign-aligned quaternions.
template <typename Scalar>
Quat<Scalar> rotation_from_sides(const SideReconstruction<Scalar>& side_a,
                                 const SideReconstruction<Scalar>& side_b,
                                 const Vec3<Scalar>& axis_a,
                                 const Vec3<Scalar>& axis_b,
                                 const BearingPair<Scalar>& phys_a,
                                 const BearingPair<Scalar>& phys_b) {
  const Vec3<Scalar>& u_hat = side_a.direction;   // A -> B, in A frame
  const Vec3<Scalar>& up_hat = side_b.direction;  // B -> A, in B frame
  // plane through A's landmark line and the sight line, both frames
  const Quat<Scalar> q1 = triad_rotation<Scalar>(
      up_hat, -u_hat, phys_b.left.cross(phys_b.right).normalized(),
      axis_a.cross(u_hat).normalized());
  // plane through B's landmark line and the sight line, both frames
  const Quat<Scalar> q2 = triad_rotation<Scalar>(
      up_hat, -u_hat, axis_b.cross(up_hat).normalized(),
      phys_a.left.cross(phys_a.right).normalized());
  return sign_aligned_mean(q1, q2);
}

// Total angular mismatch between the four observed bearings and the ones
// predicted by a candidate pose.
template <typename Scalar>
Scalar bearing_reprojection_residual(const Quat<Scalar>& rotation,
                                     const Vec3<Scalar>& translation,
                                     const BearingPair<Scalar>& phys_a,
                                     const BearingPair<Scalar>& phys_b,
                                     const NodeGeometry<Scalar>& geom_a,
                                     const NodeGeometry<Scalar>& geom_b) {
  const Eigen::Matrix<Scalar, 3, 3> r = rotation.toRotationMatrix();
  const Vec3<Scalar> lb = translation + r * geom_b.left_offset;
  const Vec3<Scalar> rb = translation + r * geom_b.right_offset;
  const Vec3<Scalar> la = r.transpose() * (geom_a.left_offset - translation);
  const Vec3<Scalar> ra = r.transpose() * (geom_a.right_offset - translation);
  return subtended_angle<Scalar>(lb.normalized(), phys_a.left) +
         subtended_angle<Scalar>(rb.normalized(), phys_a.right) +
         subtended_angle<Scalar>(la.normalized(), phys_b.left) +
         subtended_angle<Scalar>(ra.normalized(), phys_b.right);
}

}  // namespace detail

/// Full solution of the two-image relative-pose problem, including the two
/// direction-swapped range estimates kept for consistency checking.
template <typename Scalar>
struct PoseSolution {
  RelativePose<Scalar> pose;
  Scalar range_from_a = Scalar(0);  ///< estimate anchored at A's image
  Scalar range_from_b = Scalar(0);  ///< estimate anchored at B's image
  Scalar reprojection_residual = Scalar(0);  ///< radians, sum over 4 bearings
};

using PoseSolutiond = PoseSolution<double>;

/// Solves position and rotation from image-ordered bearing pairs.
///
/// obs_a holds A's bearings to B's landmarks, obs_b the converse, both
/// ordered by image position. Facing cameras observe each other's landmark
/// pair mirrored, so the image-left bearing corresponds to the observed
/// node's physical right landmark.
template <typename Scalar>
PoseSolution<Scalar> solve_relative_pose_bearings(
    const BearingPair<Scalar>& obs_a, const BearingPair<Scalar>& obs_b,
    const NodeGeometry<Scalar>& geom_a, const NodeGeometry<Scalar>& geom_b) {
  // image order -> physical order
  const BearingPair<Scalar> phys_a{obs_a.right, obs_a.left};
  const BearingPair<Scalar> phys_b{obs_b.right, obs_b.left};

  const Scalar alpha_a = subtended_angle(phys_a.left, phys_a.right);
  const Scalar alpha_b = subtended_angle(phys_b.left, phys_b.right);
  const Vec3<Scalar> axis_a = geom_a.baseline_axis();
  const Vec3<Scalar> axis_b = geom_b.baseline_axis();

  const auto sides_a = reconstruct_side(phys_a.left, phys_a.right, axis_a,
                                        geom_a.d, geom_b.d, alpha_b);
  const auto sides_b = reconstruct_side(phys_b.left, phys_b.right, axis_b,
                                        geom_b.d, geom_a.d, alpha_a);

  std::optional<PoseSolution<Scalar>> best;
  for (const auto& sa : sides_a) {
    if (sa.direction.z() <= Scalar(0)) continue;  // behind the camera
    for (const auto& sb : sides_b) {
      if (sb.direction.z() <= Scalar(0)) continue;
      Quat<Scalar> q;
      try {
        q = detail::rotation_from_sides(sa, sb, axis_a, axis_b, phys_a, phys_b);
      } catch (const GeometryError&) {
        continue;
      }
      const Scalar l = range_averaged(sa.range, sb.range);
      const Vec3<Scalar> t = position_from_range(sa.direction, l);
      const Scalar resid = detail::bearing_reprojection_residual(
          q, t, phys_a, phys_b, geom_a, geom_b);
      if (!best || resid < best->reprojection_residual) {
        PoseSolution<Scalar> s;
        s.pose.rotation = q;
        s.pose.translation = t;
        s.pose.range = l;
        s.range_from_a = sa.range;
        s.range_from_b = sb.range;
        s.reprojection_residual = resid;
        best = s;
      }
    }
  }
  if (!best) {
    throw GeometryError(GeometryFault::DegeneratePlane,
                        "no mutually consistent landmark reconstruction");
  }
  return *best;
}

/// Relative orientation only; see solve_relative_pose_bearings.
template <typename Scalar>
Quat<Scalar> recover_rotation(const BearingPair<Scalar>& obs_a,
                              const BearingPair<Scalar>& obs_b,
                              const NodeGeometry<Scalar>& geom_a,
                              const NodeGeometry<Scalar>& geom_b) {
  return solve_relative_pose_bearings(obs_a, obs_b, geom_a, geom_b)
      .pose.rotation;
}

/// End-to-end solve from labeled pixel detections: unprojection, both
/// one-sided reconstructions, range averaging, and rotation recovery.
template <typename Scalar>
PoseSolution<Scalar> solve_relative_pose(const PixelPair<Scalar>& det_a,
                                         const PixelPair<Scalar>& det_b,
                                         const CameraIntrinsics<Scalar>& k_a,
                                         const CameraIntrinsics<Scalar>& k_b,
                                         const NodeGeometry<Scalar>& geom_a,
                                         const NodeGeometry<Scalar>& geom_b) {
  const BearingPair<Scalar> obs_a{unproject(det_a.left, k_a),
                                  unproject(det_a.right, k_a)};
  const BearingPair<Scalar> obs_b{unproject(det_b.left, k_b),
                                  unproject(det_b.right, k_b)};
  return solve_relative_pose_bearings(obs_a, obs_b, geom_a, geom_b);
}

/// Geodesic distance between two rotations, in radians. Computed through
/// the quaternion chord, which stays accurate for very small angles where
/// the arc-cosine of the dot product saturates.
template <typename Scalar>
Scalar geodesic_angle(const Quat<Scalar>& a, const Quat<Scalar>& b) {
  const Scalar chord = std::min((a.coeffs() - b.coeffs()).norm(),
                                (a.coeffs() + b.coeffs()).norm());
  return Scalar(4) * std::asin(std::clamp(chord / Scalar(2), Scalar(0), Scalar(1)));
}

}  // namespace uwcl
