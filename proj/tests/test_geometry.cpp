#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "uwcl/geometry.hpp"

using namespace uwcl;
using testutil::Scene;
using Eigen::Vector3d;

namespace {

CameraIntrinsicsd test_camera() {
  CameraIntrinsicsd k;
  k.fx = 702.5;
  k.fy = 698.1;
  k.cx = 641.3;
  k.cy = 478.2;
  k.image_width = 1280;
  k.image_height = 960;
  return k;
}

}  // namespace

TEST_CASE("unproject maps the principal point to the optical axis") {
  const auto k = test_camera();
  const Vector3d b = unproject<double>({k.cx, k.cy}, k);
  CHECK(std::abs(b.x()) < 1e-15);
  CHECK(std::abs(b.y()) < 1e-15);
  CHECK(b.z() == doctest::Approx(1));
}

TEST_CASE("unproject of (cx+fx, cy) is the normalized (1,0,1) direction") {
  const auto k = test_camera();
  const Vector3d b = unproject<double>({k.cx + k.fx, k.cy}, k);
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(b.x() == doctest::Approx(s).epsilon(1e-12));
  CHECK(std::abs(b.y()) < 1e-15);
  CHECK(b.z() == doctest::Approx(s).epsilon(1e-12));
}

TEST_CASE("project(unproject(p)) round-trips within 1e-9 px under distortion") {
  auto k = test_camera();
  k.radial_distortion = Eigen::Vector2d(-0.12, 0.025);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> du(0.0, k.image_width - 1.0);
  std::uniform_real_distribution<double> dv(0.0, k.image_height - 1.0);
  for (int i = 0; i < 2000; ++i) {
    const PixelPointd p{du(rng), dv(rng)};
    const Vector3d b = unproject(p, k);
    CHECK(b.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b.z() > 0);
    const PixelPointd q = project(b, k);
    CHECK(std::hypot(q.u - p.u, q.v - p.v) < 1e-9);
  }
}

TEST_CASE("unproject rejects non-finite pixels") {
  const auto k = test_camera();
  CHECK_THROWS_WITH_AS(unproject<double>({std::nan(""), 100.0}, k),
                       doctest::Contains("NonFinitePixel"), GeometryError);
}

TEST_CASE("unproject reports divergence for an uninvertible distortion") {
  auto k = test_camera();
  k.radial_distortion = Eigen::Vector2d(-3.5, 2.0);  // folds far off center
  bool threw = false;
  try {
    unproject<double>({k.image_width - 1.0, k.image_height - 1.0}, k);
  } catch (const GeometryError& e) {
    threw = true;
    CHECK(e.fault() == GeometryFault::DistortionDivergence);
  }
  CHECK(threw);
}

TEST_CASE("subtended_angle trivial and orthogonal cases") {
  CHECK(subtended_angle<double>({0, 0, 1}, {0, 0, 1}) == doctest::Approx(0).scale(1));
  CHECK(subtended_angle<double>({0, 0, 1}, {1, 0, 0}) ==
        doctest::Approx(EIGEN_PI / 2).epsilon(1e-14));
}

TEST_CASE("subtended_angle matches a planar atan2 oracle") {
  // two landmarks at (+-0.44, 0, 3.0) seen from the origin
  const double half = 0.44, z = 3.0;
  const Vector3d b1 = Vector3d(-half, 0, z).normalized();
  const Vector3d b2 = Vector3d(half, 0, z).normalized();
  const double oracle = 2.0 * std::atan2(half, z);
  CHECK(subtended_angle(b1, b2) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("baseline_angle trivial symmetric cases") {
  CHECK(baseline_angle<double>({0, 0, 1}, {0, 0, 1}) == doctest::Approx(0).scale(1));
  const Vector3d l = Vector3d(-0.2, 0.1, 1).normalized();
  const Vector3d r = Vector3d(0.2, -0.1, 1).normalized();
  CHECK(baseline_angle(l, r) == doctest::Approx(0).scale(1));
}

TEST_CASE("baseline_angle rejects antipodal bearings") {
  CHECK_THROWS_AS(baseline_angle<double>({0, 0, 1}, {0, 0, -1}), GeometryError);
}

TEST_CASE("baseline_angle stays within the midpoint-approximation bound") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    const Scene s = testutil::random_scene(rng);
    const auto o = testutil::observe(s);
    const double beta_est = baseline_angle(o.uL, o.uR);
    const Vector3d u_true = s.t.normalized();
    const double beta_true = std::acos(std::clamp(u_true.z(), -1.0, 1.0));
    // the estimate may only drift from truth by the bisector's own angular
    // offset, measured directly from the ground-truth direction
    const Vector3d m = (o.uL + o.uR).normalized();
    const double bound = std::acos(std::clamp(m.dot(u_true), -1.0, 1.0));
    CHECK(std::abs(beta_est - beta_true) <= bound + 1e-12);
  }
}

TEST_CASE("closed-form range: right-angle head-on case gives d/2") {
  // landmarks at (+-0.5, 0), observer straight ahead where they subtend 90
  // degrees: the observer sits 0.5 away
  const double l = range_closed_form(1.0, AnglePaird{EIGEN_PI / 2, 0.0});
  CHECK(l == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("closed-form range: beta = pi/2 collapses to d/2 for any alpha") {
  const double d = 1.0;
  CHECK(range_closed_form(d, AnglePaird{EIGEN_PI / 3, EIGEN_PI / 2}) ==
        doctest::Approx(0.5).epsilon(1e-12));
  for (int i = 1; i <= 100; ++i) {
    const double alpha = 0.02 + (EIGEN_PI - 0.04) * i / 101.0;
    const double l = range_closed_form(d, AnglePaird{alpha, EIGEN_PI / 2});
    CHECK(std::abs(l - 0.5) < 1e-12);
  }
}

TEST_CASE("closed-form range recovers the true distance from exact angles") {
  // observer at 3.2 m, 25 degrees off axis, in the baseline plane
  const double d = 0.88, l_true = 3.2, off = 25.0 * EIGEN_PI / 180.0;
  Scene s;
  s.d_a = d;
  s.d_b = d;
  s.t = l_true * Vector3d(std::sin(off), 0, std::cos(off));
  s.rot = testutil::look_rotation(-s.t);
  const double alpha = testutil::exact_alpha_from_b(s);
  const double beta = testutil::exact_beta_at_a(s);
  CHECK(range_closed_form(d, AnglePaird{alpha, beta}) ==
        doctest::Approx(l_true).epsilon(1e-10));

  // same with the observer out of the x-z plane: beta measured against the
  // baseline plane keeps the expression exact
  s.t = l_true * Vector3d(std::sin(off) * 0.6, std::sin(off) * 0.8,
                          std::cos(off));
  const double alpha2 = testutil::exact_alpha_from_b(s);
  const double beta2 = testutil::exact_beta_at_a(s);
  CHECK(range_closed_form(d, AnglePaird{alpha2, beta2}) ==
        doctest::Approx(l_true).epsilon(1e-10));
}

TEST_CASE("closed-form range rejects a degenerate alpha") {
  CHECK_THROWS_AS(range_closed_form(1.0, AnglePaird{0.0, 0.3}), GeometryError);
}

TEST_CASE("closed-form range scale equivariance") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const AnglePaird ang{0.05 + 2.9 * uni(rng), 1.5 * uni(rng)};
    const double d = 0.3 + uni(rng);
    const double s = 0.1 + 5.0 * uni(rng);
    const double l1 = range_closed_form(d, ang);
    const double l2 = range_closed_form(s * d, ang);
    CHECK(l2 == doctest::Approx(s * l1).epsilon(1e-12));
  }
}

TEST_CASE("closed-form range decreases strictly in alpha on (0, pi/2]") {
  for (const double beta : {0.0, 0.4, 1.0, 1.4}) {
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 60; ++i) {
      const double alpha = i * (EIGEN_PI / 2) / 60.0;
      const double l = range_closed_form(1.0, AnglePaird{alpha, beta});
      CHECK(l < prev);
      prev = l;
    }
  }
}

TEST_CASE("range_averaged is the arithmetic mean") {
  CHECK(range_averaged(3.0, 3.0) == doctest::Approx(3.0));
  CHECK(range_averaged(2.0, 4.0) == doctest::Approx(3.0));
}

TEST_CASE("position_from_range extends the bearing") {
  const Vector3d p = position_from_range<double>({0, 0, 1}, 2.0);
  CHECK((p - Vector3d(0, 0, 2)).norm() < 1e-15);
  const double s = 1.0 / std::sqrt(2.0);
  const Vector3d q = position_from_range<double>({s, 0, s}, std::sqrt(2.0));
  CHECK((q - Vector3d(1, 0, 1)).norm() < 1e-12);
}

TEST_CASE("reconstruct_side agrees with the closed-form range expression") {
  // at the reconstructed solution, alpha from the far image and the
  // baseline-plane beta must reproduce the same range through the closed form
  std::mt19937_64 rng(23);
  for (int i = 0; i < 300; ++i) {
    const Scene s = testutil::random_scene(rng);
    const auto o = testutil::observe(s);
    const double alpha_b = subtended_angle(o.vL, o.vR);
    const auto recs = reconstruct_side<double>(o.uL, o.uR, Vector3d(1, 0, 0),
                                               s.d_a, s.d_b, alpha_b);
    REQUIRE(!recs.empty());
    double best_err = 1e9;
    for (const auto& rec : recs) {
      best_err = std::min(best_err, std::abs(rec.range - s.t.norm()));
    }
    CHECK(best_err < 1e-9);
    for (const auto& rec : recs) {
      if (rec.residual > 1e-10) continue;  // tangent pseudo-solutions drift
      const double sin_beta = std::abs(rec.direction.x());
      const AnglePaird ang{alpha_b, std::asin(std::clamp(sin_beta, 0.0, 1.0))};
      CHECK(range_closed_form(s.d_a, ang) ==
            doctest::Approx(rec.range).epsilon(1e-9));
    }
  }
}

TEST_CASE("both direction-swapped range estimates are exact on clean scenes") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const Scene s = testutil::random_scene(rng);
    const auto o = testutil::observe(s);
    const auto sol = solve_relative_pose_bearings<double>(
        o.obs_a, o.obs_b, NodeGeometryd::symmetric(s.d_a),
        NodeGeometryd::symmetric(s.d_b));
    const double l_true = s.t.norm();
    CHECK(std::abs(sol.range_from_a - l_true) < 1e-9);
    CHECK(std::abs(sol.range_from_b - l_true) < 1e-9);
  }
}

TEST_CASE("recover_rotation: face-to-face nodes differ by a yaw of pi") {
  Scene s;
  s.t = Vector3d(0, 0, 2.0);
  s.rot = testutil::rot_y(EIGEN_PI);
  s.d_a = s.d_b = 1.0;
  const auto o = testutil::observe(s);
  const auto q = recover_rotation<double>(o.obs_a, o.obs_b,
                                          NodeGeometryd::symmetric(1.0),
                                          NodeGeometryd::symmetric(1.0));
  CHECK(testutil::quat_angle(q, Eigen::Quaterniond(s.rot)) < 1e-9);
  CHECK(q.w() >= 0);
}

TEST_CASE("recover_rotation: 30 degree yaw offset matches ground truth") {
  Scene s;
  s.t = Vector3d(0.3, -0.2, 3.0);
  s.rot = testutil::look_rotation(-s.t) * testutil::rot_y(30.0 * EIGEN_PI / 180.0);
  s.d_a = s.d_b = 0.88;
  const auto o = testutil::observe(s);
  const auto q = recover_rotation<double>(o.obs_a, o.obs_b,
                                          NodeGeometryd::symmetric(0.88),
                                          NodeGeometryd::symmetric(0.88));
  CHECK(testutil::quat_angle(q, Eigen::Quaterniond(s.rot)) < 1e-9);
}

TEST_CASE("recover_rotation: randomized sweep stays under 1e-6 rad") {
  std::mt19937_64 rng(99);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const Scene s = testutil::random_scene(rng);
    const auto o = testutil::observe(s);
    const auto q = recover_rotation<double>(o.obs_a, o.obs_b,
                                            NodeGeometryd::symmetric(s.d_a),
                                            NodeGeometryd::symmetric(s.d_b));
    worst = std::max(worst, testutil::quat_angle(q, Eigen::Quaterniond(s.rot)));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("rotation output maps the sight line consistently") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    const Scene s = testutil::random_scene(rng);
    const auto o = testutil::observe(s);
    const auto sol = solve_relative_pose_bearings<double>(
        o.obs_a, o.obs_b, NodeGeometryd::symmetric(s.d_a),
        NodeGeometryd::symmetric(s.d_b));
    CHECK(std::abs(sol.pose.rotation.norm() - 1.0) < 1e-12);
    CHECK(sol.pose.rotation.w() >= 0);
    // the recovered rotation must map B's reconstructed sight line onto the
    // negated A-side one
    const Vector3d u_a = sol.pose.translation.normalized();
    const Vector3d u_b_mapped =
        sol.pose.rotation * (sol.pose.rotation.conjugate() * -u_a);
    CHECK((u_b_mapped + u_a).norm() < 1e-9);
  }
}

TEST_CASE("solve_relative_pose: noise-free scene at 3.2 m") {
  auto k = test_camera();
  k.radial_distortion = Eigen::Vector2d(-0.05, 0.01);
  Scene s;
  s.t = 3.2 * Vector3d(std::sin(0.3), std::sin(0.15), 1).normalized();
  s.rot = testutil::look_rotation(-s.t) * testutil::rot_y(0.3) *
          testutil::rot_x(0.12);
  s.d_a = s.d_b = 0.88;
  const auto o = testutil::observe(s);
  const auto px = [&](const Vector3d& b) { return project(b, k); };
  const PixelPaird det_a{px(o.obs_a.left), px(o.obs_a.right)};
  const PixelPaird det_b{px(o.obs_b.left), px(o.obs_b.right)};
  const auto sol = solve_relative_pose(det_a, det_b, k, k,
                                       NodeGeometryd::symmetric(0.88),
                                       NodeGeometryd::symmetric(0.88));
  CHECK((sol.pose.translation - s.t).norm() < 1e-6);
  CHECK(testutil::quat_angle(sol.pose.rotation, Eigen::Quaterniond(s.rot)) < 1e-6);
  CHECK(sol.pose.range == doctest::Approx(s.t.norm()).epsilon(1e-9));
}

TEST_CASE("solve_relative_pose: symmetric face-to-face at 0.5 m with d=1") {
  auto k = test_camera();
  Scene s;
  s.t = Vector3d(0, 0, 0.5);
  s.rot = testutil::rot_y(EIGEN_PI);
  s.d_a = s.d_b = 1.0;
  const auto o = testutil::observe(s);
  // here the landmarks subtend exactly 90 degrees in each image
  CHECK(subtended_angle(o.uL, o.uR) == doctest::Approx(EIGEN_PI / 2).epsilon(1e-12));
  const auto px = [&](const Vector3d& b) { return project(b, k); };
  const PixelPaird det_a{px(o.obs_a.left), px(o.obs_a.right)};
  const PixelPaird det_b{px(o.obs_b.left), px(o.obs_b.right)};
  const auto sol = solve_relative_pose(det_a, det_b, k, k,
                                       NodeGeometryd::symmetric(1.0),
                                       NodeGeometryd::symmetric(1.0));
  CHECK(sol.pose.range == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("swapped labels on one side cannot pass as a clean solution") {
  std::mt19937_64 rng(31);
  int caught = 0, inconsistent = 0, residual_flagged = 0;
  for (int i = 0; i < 100; ++i) {
    const Scene s = testutil::random_scene(rng);
    auto o = testutil::observe(s);
    std::swap(o.obs_b.left, o.obs_b.right);  // mislabeled detection in I_B
    try {
      const auto sol = solve_relative_pose_bearings<double>(
          o.obs_a, o.obs_b, NodeGeometryd::symmetric(s.d_a),
          NodeGeometryd::symmetric(s.d_b));
      const double mean = 0.5 * (sol.range_from_a + sol.range_from_b);
      if (std::abs(sol.range_from_a - sol.range_from_b) > 0.02 * mean + 0.02) {
        ++inconsistent;
      } else if (sol.reprojection_residual > 1e-6) {
        ++residual_flagged;
      }
    } catch (const GeometryError&) {
      ++caught;
    }
  }
  // every mislabeled frame must be catchable downstream
  CHECK(caught + inconsistent + residual_flagged == 100);
}

TEST_CASE("solver works with unequal baselines") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 100; ++i) {
    Scene s = testutil::random_scene(rng);
    s.d_b = 0.57;  // A keeps its own spacing
    const auto o = testutil::observe(s);
    const auto sol = solve_relative_pose_bearings<double>(
        o.obs_a, o.obs_b, NodeGeometryd::symmetric(s.d_a),
        NodeGeometryd::symmetric(s.d_b));
    CHECK((sol.pose.translation - s.t).norm() < 1e-7);
  }
}

TEST_CASE("geodesic_angle basics") {
  const Eigen::Quaterniond id = Eigen::Quaterniond::Identity();
  CHECK(geodesic_angle(id, id) == doctest::Approx(0).scale(1));
  const Eigen::Quaterniond y90(Eigen::AngleAxisd(EIGEN_PI / 2, Vector3d::UnitY()));
  CHECK(geodesic_angle(id, y90) == doctest::Approx(EIGEN_PI / 2).epsilon(1e-12));
  // sign flip is the same rotation
  Eigen::Quaterniond neg = y90;
  neg.coeffs() = -neg.coeffs();
  CHECK(geodesic_angle(y90, neg) == doctest::Approx(0).scale(1));
}
