#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace uwcl {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

enum class GeometryFault {
  NonFinitePixel,
  DistortionDivergence,
  DegenerateMidpoint,
  DegenerateAlpha,
  DegeneratePlane,
};

inline const char* to_string(GeometryFault f) {
  switch (f) {
    case GeometryFault::NonFinitePixel: return "NonFinitePixel";
    case GeometryFault::DistortionDivergence: return "DistortionDivergence";
    case GeometryFault::DegenerateMidpoint: return "DegenerateMidpoint";
    case GeometryFault::DegenerateAlpha: return "DegenerateAlpha";
    case GeometryFault::DegeneratePlane: return "DegeneratePlane";
  }
  return "Unknown";
}

/// Thrown by geometric operations on degenerate or invalid input.
class GeometryError : public std::runtime_error {
 public:
  GeometryError(GeometryFault fault, const std::string& what)
      : std::runtime_error(std::string(to_string(fault)) + ": " + what),
        fault_(fault) {}
  GeometryFault fault() const { return fault_; }

 private:
  GeometryFault fault_;
};

/// Sub-pixel image location. u grows right, v grows down.
template <typename Scalar>
struct PixelPoint {
  Scalar u = Scalar(0);
  Scalar v = Scalar(0);
};

using PixelPointd = PixelPoint<double>;

/// Pinhole camera with a two-coefficient radial distortion model.
///
/// Camera frame convention used throughout: z forward along the optical
/// axis, x right, y down. Distortion acts on normalized image coordinates:
/// (xd, yd) = (x, y) * (1 + k1 r^2 + k2 r^4), r^2 = x^2 + y^2.
template <typename Scalar>
struct CameraIntrinsics {
  Scalar fx = Scalar(0);
  Scalar fy = Scalar(0);
  Scalar cx = Scalar(0);
  Scalar cy = Scalar(0);
  int image_width = 0;
  int image_height = 0;
  Vec2<Scalar> radial_distortion = Vec2<Scalar>::Zero();

  bool valid() const {
    return fx > Scalar(0) && fy > Scalar(0) && cx > Scalar(0) &&
           cy > Scalar(0) && cx < Scalar(image_width) &&
           cy < Scalar(image_height);
  }

  bool contains(const PixelPoint<Scalar>& p) const {
    return p.u >= Scalar(0) && p.v >= Scalar(0) &&
           p.u <= Scalar(image_width - 1) && p.v <= Scalar(image_height - 1);
  }
};

using CameraIntrinsicsd = CameraIntrinsics<double>;

namespace detail {

template <typename Scalar>
Vec2<Scalar> distort(const Vec2<Scalar>& xy, const Vec2<Scalar>& k) {
  const Scalar r2 = xy.squaredNorm();
  return xy * (Scalar(1) + r2 * (k[0] + r2 * k[1]));
}

}  // namespace detail

/// Projects a camera-frame point (z > 0) to pixel coordinates, applying
/// radial distortion.
template <typename Scalar>
PixelPoint<Scalar> project(const Vec3<Scalar>& p,
                           const CameraIntrinsics<Scalar>& k) {
  const Vec2<Scalar> n(p.x() / p.z(), p.y() / p.z());
  const Vec2<Scalar> d = detail::distort(n, k.radial_distortion);
  return {k.fx * d.x() + k.cx, k.fy * d.y() + k.cy};
}

/// Inverts the camera model at pixel p and returns the unit bearing whose
/// projection under k is p. The result has positive z.
///
/// Undistortion is a fixed-point iteration x <- xd / (1 + k1 r^2 + k2 r^4)
/// capped at 20 iterations with a 1e-12 px convergence tolerance.
template <typename Scalar>
Vec3<Scalar> unproject(const PixelPoint<Scalar>& p,
                       const CameraIntrinsics<Scalar>& k) {
  if (!std::isfinite(p.u) || !std::isfinite(p.v)) {
    throw GeometryError(GeometryFault::NonFinitePixel,
                        "pixel coordinates must be finite");
  }
  const Vec2<Scalar> target((p.u - k.cx) / k.fx, (p.v - k.cy) / k.fy);
  Vec2<Scalar> xy = target;
  if (!k.radial_distortion.isZero()) {
    const Scalar tol = Scalar(1e-12) / std::max(k.fx, k.fy);
    bool converged = false;
    for (int it = 0; it < 20; ++it) {
      const Scalar r2 = xy.squaredNorm();
      const Scalar scale =
          Scalar(1) + r2 * (k.radial_distortion[0] + r2 * k.radial_distortion[1]);
      const Vec2<Scalar> next = target / scale;
      const bool done = (next - xy).norm() < tol;
      xy = next;
      if (done) {
        converged = true;
        break;
      }
    }
    // accept only if the forward model maps back onto the input pixel
    const Vec2<Scalar> rt = detail::distort(xy, k.radial_distortion);
    const Vec2<Scalar> err(k.fx * (rt.x() - target.x()),
                           k.fy * (rt.y() - target.y()));
    if (!converged || err.norm() > Scalar(1e-9)) {
      throw GeometryError(GeometryFault::DistortionDivergence,
                          "iterative undistortion failed to converge");
    }
  }
  return Vec3<Scalar>(xy.x(), xy.y(), Scalar(1)).normalized();
}

}  // namespace uwcl
