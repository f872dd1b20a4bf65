#include "uwcl/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "uwcl/dataset.hpp"

namespace uwcl {

RelativePosed relative_pose_of(const ScenePose& scene) {
  RelativePosed pose;
  const Eigen::Quaterniond qa_inv = scene.orientation_a.conjugate();
  pose.rotation = qa_inv * scene.orientation_b;
  if (pose.rotation.w() < 0) pose.rotation.coeffs() = -pose.rotation.coeffs();
  pose.translation = qa_inv * (scene.position_b - scene.position_a);
  pose.range = pose.translation.norm();
  return pose;
}

Eigen::Quaterniond look_at(const Eigen::Vector3d& forward) {
  const Eigen::Vector3d z = forward.normalized();
  const Eigen::Vector3d down(0, 0, 1);
  Eigen::Vector3d y = down - down.dot(z) * z;
  if (y.norm() < 1e-9) y = Eigen::Vector3d(1, 0, 0);  // looking straight down
  y.normalize();
  const Eigen::Vector3d x = y.cross(z);
  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return Eigen::Quaterniond(r);
}

CameraIntrinsicsd default_intrinsics() {
  CameraIntrinsicsd k;
  k.fx = k.fy = 700.0;
  k.cx = 640.0;
  k.cy = 480.0;
  k.image_width = 1280;
  k.image_height = 960;
  k.radial_distortion = Eigen::Vector2d(-0.05, 0.01);
  return k;
}

TwoNodeConfig TwoNodeConfig::standard(double d) {
  TwoNodeConfig cfg;
  cfg.intrinsics_a = default_intrinsics();
  cfg.intrinsics_b = default_intrinsics();
  cfg.geometry_a = NodeGeometryd::symmetric(d);
  cfg.geometry_b = NodeGeometryd::symmetric(d);
  return cfg;
}

namespace {

struct CameraView {
  Eigen::Vector3d position;
  Eigen::Matrix3d world_to_cam;  // transpose of camera->world
};

CameraView view_of(const Eigen::Vector3d& pos, const Eigen::Quaterniond& q) {
  return {pos, q.toRotationMatrix().transpose()};
}

std::optional<PixelPointd> project_visible(const Eigen::Vector3d& world_point,
                                           const CameraView& cam,
                                           const CameraIntrinsicsd& k) {
  const Eigen::Vector3d p = cam.world_to_cam * (world_point - cam.position);
  if (p.z() <= 1e-6) return std::nullopt;
  const PixelPointd px = project<double>(p, k);
  if (px.u < 0 || px.v < 0 || px.u > k.image_width - 1 ||
      px.v > k.image_height - 1) {
    return std::nullopt;
  }
  return px;
}

double roll_of(const Eigen::Quaterniond& camera_orientation) {
  const Eigen::Matrix3d r_wi =
      camera_orientation.toRotationMatrix() * imu_to_camera();
  return std::atan2(r_wi(2, 1), r_wi(2, 2));
}

// order two pixels by roll-compensated u
PixelPaird image_order(const PixelPointd& p0, const PixelPointd& p1,
                       double roll) {
  const double cr = std::cos(roll), sr = std::sin(roll);
  const double u0 = p0.u * cr + p0.v * sr;
  const double u1 = p1.u * cr + p1.v * sr;
  if (u0 <= u1) return {p0, p1};
  return {p1, p0};
}

struct LandmarkWorld {
  Eigen::Vector3d left, right;
};

LandmarkWorld landmarks_world(const Eigen::Vector3d& pos,
                              const Eigen::Quaterniond& q,
                              const NodeGeometryd& geom) {
  const Eigen::Matrix3d r = q.toRotationMatrix();
  return {pos + r * geom.left_offset, pos + r * geom.right_offset};
}

}  // namespace

LandmarkProjection render_landmarks(const ScenePose& scene,
                                    const TwoNodeConfig& cfg) {
  const CameraView cam_a = view_of(scene.position_a, scene.orientation_a);
  const CameraView cam_b = view_of(scene.position_b, scene.orientation_b);
  const LandmarkWorld lm_a =
      landmarks_world(scene.position_a, scene.orientation_a, cfg.geometry_a);
  const LandmarkWorld lm_b =
      landmarks_world(scene.position_b, scene.orientation_b, cfg.geometry_b);

  const auto bl_a = project_visible(lm_b.left, cam_a, cfg.intrinsics_a);
  const auto br_a = project_visible(lm_b.right, cam_a, cfg.intrinsics_a);
  const auto al_b = project_visible(lm_a.left, cam_b, cfg.intrinsics_b);
  const auto ar_b = project_visible(lm_a.right, cam_b, cfg.intrinsics_b);
  if (!bl_a || !br_a || !al_b || !ar_b) {
    throw NotVisibleError("landmark outside a camera's view");
  }
  LandmarkProjection out;
  out.in_a = image_order(*bl_a, *br_a, roll_of(scene.orientation_a));
  out.in_b = image_order(*al_b, *ar_b, roll_of(scene.orientation_b));
  return out;
}

RasterImage render_beam_image(int width, int height,
                              const std::vector<LightSource>& lights,
                              const PixelPointd& principal_point,
                              const NoiseModel& noise, Rng& rng) {
  std::vector<double> intensity(static_cast<std::size_t>(width) * height, 0.0);
  const double sw = std::max(noise.beam_width_sigma, 0.5);
  const double elong = noise.beam_elongation;

  for (const auto& light : lights) {
    double gx = light.pixel.u - principal_point.u;
    double gy = light.pixel.v - principal_point.v;
    const double gn = std::hypot(gx, gy);
    if (gn < 1e-9) {
      gx = 1;
      gy = 0;
    } else {
      gx /= gn;
      gy /= gn;
    }
    const double reach = (elong > 0.5 ? 7.0 * elong : 0.0) + 4.0 * sw;
    const int x0 = std::max(0, int(std::floor(std::min(light.pixel.u, light.pixel.u + gx * reach) - 4.0 * sw)));
    const int x1 = std::min(width - 1, int(std::ceil(std::max(light.pixel.u, light.pixel.u + gx * reach) + 4.0 * sw)));
    const int y0 = std::max(0, int(std::floor(std::min(light.pixel.v, light.pixel.v + gy * reach) - 4.0 * sw)));
    const int y1 = std::min(height - 1, int(std::ceil(std::max(light.pixel.v, light.pixel.v + gy * reach) + 4.0 * sw)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - light.pixel.u;
        const double dy = y - light.pixel.v;
        double value;
        if (elong > 0.5) {
          const double along = dx * gx + dy * gy;
          const double px = dx - along * gx;
          const double py = dy - along * gy;
          const double perp2 = px * px + py * py;
          const double head = along >= 0
                                  ? std::exp(-along / elong)
                                  : std::exp(-along * along / (2 * sw * sw));
          value = std::exp(-perp2 / (2 * sw * sw)) * head;
        } else {
          value = std::exp(-(dx * dx + dy * dy) / (2 * sw * sw));
        }
        intensity[static_cast<std::size_t>(y) * width + x] +=
            light.amplitude * value;
      }
    }
  }

  // scattering speckle
  const int snow = rng.poisson(noise.snow_rate);
  for (int i = 0; i < snow; ++i) {
    const int x = std::min(width - 1, int(rng.uniform(0, width)));
    const int y = std::min(height - 1, int(rng.uniform(0, height)));
    intensity[static_cast<std::size_t>(y) * width + x] += rng.uniform(0.4, 1.0);
  }

  RasterImage img = RasterImage::create(width, height);
  constexpr double kBgR = 3, kBgG = 9, kBgB = 13;     // dark water
  constexpr double kLightR = 235, kLightG = 245, kLightB = 255;
  for (std::size_t i = 0; i < intensity.size(); ++i) {
    double v = intensity[i];
    if (noise.image_noise_sigma > 0) {
      v += rng.normal(0.0, noise.image_noise_sigma);
    }
    v = std::clamp(v, 0.0, 1.0);
    img.pixels[3 * i + 0] = static_cast<std::uint8_t>(
        std::lround(std::clamp(kBgR + v * kLightR, 0.0, 255.0)));
    img.pixels[3 * i + 1] = static_cast<std::uint8_t>(
        std::lround(std::clamp(kBgG + v * kLightG, 0.0, 255.0)));
    img.pixels[3 * i + 2] = static_cast<std::uint8_t>(
        std::lround(std::clamp(kBgB + v * kLightB, 0.0, 255.0)));
  }
  return img;
}

NodeSensorSamples synth_sensors(const Eigen::Vector3d& position,
                                const Eigen::Quaterniond& camera_orientation,
                                double timestamp,
                                const Eigen::Vector3d& magnetic_field,
                                const NoiseModel& noise, Rng& rng) {
  const Eigen::Matrix3d r_wi =
      camera_orientation.toRotationMatrix() * imu_to_camera();
  NodeSensorSamples s;
  s.imu.timestamp = timestamp;
  s.imu.accel = r_wi.transpose() * Eigen::Vector3d(0, 0, kGravity);
  s.imu.gyro = Eigen::Vector3d::Zero();
  s.mag.timestamp = timestamp;
  s.mag.mag = r_wi.transpose() * magnetic_field;
  s.depth.timestamp = timestamp;
  s.depth.depth = position.z();
  for (int i = 0; i < 3; ++i) {
    s.imu.accel[i] += rng.normal(0.0, noise.accel_noise_sigma);
    s.mag.mag[i] += rng.normal(0.0, noise.mag_noise_sigma);
  }
  s.depth.depth += rng.normal(0.0, noise.depth_noise_sigma);
  return s;
}

namespace {

Eigen::Quaterniond wobble(double t, double amplitude_deg, double period,
                          double phase) {
  const double a = amplitude_deg * EIGEN_PI / 180.0;
  const double w = 2.0 * EIGEN_PI / period;
  return Eigen::Quaterniond(
      Eigen::AngleAxisd(a * std::sin(w * t + phase), Eigen::Vector3d::UnitZ()) *
      Eigen::AngleAxisd(a * std::sin(w * t + phase + 2.1), Eigen::Vector3d::UnitY()) *
      Eigen::AngleAxisd(a * std::sin(w * t + phase + 4.2), Eigen::Vector3d::UnitX()));
}

}  // namespace

ScenePose scene_at(const TrajectorySpec& spec, double t) {
  ScenePose scene;
  scene.timestamp = t;
  scene.position_a = Eigen::Vector3d(0, 0, spec.base_depth);

  Eigen::Vector3d pb;
  switch (spec.path) {
    case TrajectorySpec::Path::Static:
      pb = Eigen::Vector3d(spec.static_range, 0, spec.base_depth);
      break;
    case TrajectorySpec::Path::Line: {
      const double s = spec.duration_s > 0 ? t / spec.duration_s : 0.0;
      const double range =
          spec.start_range + (spec.end_range - spec.start_range) * s;
      pb = Eigen::Vector3d(range, 0.3 * std::sin(2 * EIGEN_PI * t / 20.0),
                           spec.base_depth +
                               spec.depth_swing * std::sin(2 * EIGEN_PI * t / 15.0));
      break;
    }
    case TrajectorySpec::Path::Circle: {
      const double th = 2.0 * EIGEN_PI * t / std::max(spec.duration_s, 1e-9);
      pb = Eigen::Vector3d(spec.center_range + spec.radius * std::cos(th),
                           spec.radius * std::sin(th),
                           spec.base_depth +
                               spec.depth_swing * std::sin(2 * EIGEN_PI * t / 11.0));
      break;
    }
    case TrajectorySpec::Path::Lawnmower: {
      const double leg_period = std::max(spec.duration_s / 4.0, 1e-9);
      pb = Eigen::Vector3d(
          spec.start_range + spec.leg_spacing * (t / leg_period),
          0.5 * spec.leg_length * std::sin(2 * EIGEN_PI * t / leg_period),
          spec.base_depth +
              spec.depth_swing * std::sin(2 * EIGEN_PI * t / 13.0));
      break;
    }
  }
  scene.position_b = pb;
  scene.orientation_a =
      look_at(pb - scene.position_a) *
      wobble(t, spec.wobble_deg, spec.wobble_period_s, 0.4);
  scene.orientation_b =
      look_at(scene.position_a - pb) *
      wobble(t, spec.wobble_deg, spec.wobble_period_s * 1.3, 2.9);
  return scene;
}

namespace {

AttitudeEstimate attitude_of(const Eigen::Vector3d& pos,
                             const Eigen::Quaterniond& q, double t) {
  const Eigen::Matrix3d r = q.toRotationMatrix() * imu_to_camera();
  AttitudeEstimate e;
  e.timestamp = t;
  e.roll = std::atan2(r(2, 1), r(2, 2));
  e.pitch = -std::asin(std::clamp(r(2, 0), -1.0, 1.0));
  e.yaw = wrap_to_two_pi(std::atan2(r(1, 0), r(0, 0)));
  e.depth = pos.z();
  e.has_yaw = true;
  e.has_depth = true;
  return e;
}

Eigen::Vector3d mirror_about_floor(const Eigen::Vector3d& p, double floor_z) {
  return {p.x(), p.y(), 2.0 * floor_z - p.z()};
}

}  // namespace

std::optional<SyntheticFrame> synthesize_frame(const TrajectorySpec& spec,
                                               const TwoNodeConfig& cfg,
                                               const NoiseModel& noise,
                                               std::uint64_t frame_index) {
  const double t = static_cast<double>(frame_index) / spec.frame_rate_hz;
  const ScenePose scene = scene_at(spec, t);

  SyntheticFrame frame;
  frame.timestamp = t;
  frame.truth = relative_pose_of(scene);
  frame.attitude_a = attitude_of(scene.position_a, scene.orientation_a, t);
  frame.attitude_b = attitude_of(scene.position_b, scene.orientation_b, t);
  try {
    const LandmarkProjection proj = render_landmarks(scene, cfg);
    frame.pixels_in_a = proj.in_a;
    frame.pixels_in_b = proj.in_b;
  } catch (const NotVisibleError&) {
    return std::nullopt;
  }

  // distractors from the per-frame stream
  Rng rng = Rng::substream(noise.rng_seed, frame_index * 8 + 3);
  const CameraView cam_a = view_of(scene.position_a, scene.orientation_a);
  const CameraView cam_b = view_of(scene.position_b, scene.orientation_b);
  const int events = rng.poisson(noise.distractor_rate);
  for (int e = 0; e < events; ++e) {
    DistractorAnnotation d;
    if (rng.uniform() < noise.reflection_share) {
      d.kind = DistractorAnnotation::Kind::Reflection;
      const LandmarkWorld lm_a = landmarks_world(scene.position_a,
                                                 scene.orientation_a,
                                                 cfg.geometry_a);
      const LandmarkWorld lm_b = landmarks_world(scene.position_b,
                                                 scene.orientation_b,
                                                 cfg.geometry_b);
      for (const auto& p : {lm_b.left, lm_b.right}) {
        if (auto px = project_visible(mirror_about_floor(p, cfg.floor_depth),
                                      cam_a, cfg.intrinsics_a)) {
          d.in_a.push_back(*px);
        }
      }
      for (const auto& p : {lm_a.left, lm_a.right}) {
        if (auto px = project_visible(mirror_about_floor(p, cfg.floor_depth),
                                      cam_b, cfg.intrinsics_b)) {
          d.in_b.push_back(*px);
        }
      }
    } else {
      d.kind = DistractorAnnotation::Kind::StrayLight;
      const bool near_b = rng.uniform() < 0.5;
      const Eigen::Vector3d base = near_b ? scene.position_b : scene.position_a;
      const Eigen::Vector3d lamp =
          base + Eigen::Vector3d(rng.normal(0, 0.2), rng.normal(0, 0.2),
                                 -cfg.lamp_height);
      if (near_b) {
        if (auto px = project_visible(lamp, cam_a, cfg.intrinsics_a)) {
          d.in_a.push_back(*px);
        }
      } else {
        if (auto px = project_visible(lamp, cam_b, cfg.intrinsics_b)) {
          d.in_b.push_back(*px);
        }
      }
    }
    if (!d.in_a.empty() || !d.in_b.empty()) {
      frame.distractors.push_back(std::move(d));
    }
  }
  return frame;
}

namespace {

struct BuiltDetections {
  DetectionRecord rec;
};

// true pair + distractors + pixel noise, sorted top-to-bottom as a real
// detector would emit them, with the true-pair indices tracked through
DetectionRecord build_detection_record(
    double t, const PixelPaird& true_pair,
    const std::vector<PixelPointd>& distractor_pixels, double roll,
    double pixel_sigma, Rng& rng) {
  struct Item {
    PixelPointd p;
    double score;
    bool is_true_left, is_true_right;
  };
  std::vector<Item> items;
  const auto jitter = [&](const PixelPointd& p) {
    return PixelPointd{p.u + rng.normal(0, pixel_sigma),
                       p.v + rng.normal(0, pixel_sigma)};
  };
  items.push_back({jitter(true_pair.left),
                   std::clamp(0.9 + rng.normal(0, 0.03), 0.0, 1.0), true, false});
  items.push_back({jitter(true_pair.right),
                   std::clamp(0.9 + rng.normal(0, 0.03), 0.0, 1.0), false, true});
  for (const auto& p : distractor_pixels) {
    items.push_back({jitter(p), std::clamp(0.6 + rng.normal(0, 0.08), 0.0, 1.0),
                     false, false});
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.p.v != b.p.v) return a.p.v < b.p.v;
    return a.p.u < b.p.u;
  });

  DetectionRecord rec;
  rec.timestamp = t;
  int idx_left = -1, idx_right = -1;
  for (std::size_t i = 0; i < items.size(); ++i) {
    MarkerCandidate c;
    c.position = items[i].p;
    c.brightness_score = items[i].score;
    c.source_blob = static_cast<int>(i);
    rec.candidates.push_back(c);
    if (items[i].is_true_left) idx_left = static_cast<int>(i);
    if (items[i].is_true_right) idx_right = static_cast<int>(i);
  }
  rec.pairs = enumerate_pairs(rec.candidates, roll);
  rec.truth_indices = std::array<int, 2>{idx_left, idx_right};
  return rec;
}

}  // namespace

GeneratedDataset generate_trajectory(const TrajectorySpec& spec,
                                     const TwoNodeConfig& cfg,
                                     const NoiseModel& noise,
                                     const std::string& environment,
                                     bool rendered,
                                     const std::filesystem::path& out_dir) {
  DatasetManifest manifest;
  manifest.mode = rendered ? "rendered" : "detections";
  manifest.environment = environment;
  manifest.frame_rate_hz = spec.frame_rate_hz;
  manifest.declination_rad = cfg.declination;
  manifest.intrinsics_a = cfg.intrinsics_a;
  manifest.intrinsics_b = cfg.intrinsics_b;
  manifest.geometry_a = cfg.geometry_a;
  manifest.geometry_b = cfg.geometry_b;
  manifest.noise = noise;

  DatasetWriter writer(out_dir, manifest);

  const int n_frames =
      static_cast<int>(std::floor(spec.duration_s * spec.frame_rate_hz)) + 1;
  GeneratedDataset result;
  result.root = out_dir;
  result.frames_total = n_frames;

  for (int f = 0; f < n_frames; ++f) {
    const double t = f / spec.frame_rate_hz;
    const auto frame = synthesize_frame(spec, cfg, noise, f);

    TrajectoryRecord truth_rec;
    truth_rec.timestamp = t;
    if (frame) {
      truth_rec.pose = frame->truth;
      truth_rec.valid = true;
    } else {
      truth_rec.pose = relative_pose_of(scene_at(spec, t));
      truth_rec.valid = false;  // landmark out of view
    }
    writer.add_truth(truth_rec);
    if (!frame) continue;
    ++result.frames_visible;
    writer.add_truth_pixels(t, frame->pixels_in_a, frame->pixels_in_b);

    std::vector<PixelPointd> extra_a, extra_b;
    for (const auto& d : frame->distractors) {
      extra_a.insert(extra_a.end(), d.in_a.begin(), d.in_a.end());
      extra_b.insert(extra_b.end(), d.in_b.begin(), d.in_b.end());
    }

    if (!rendered) {
      Rng rng_a = Rng::substream(noise.rng_seed, f * 8 + 0);
      Rng rng_b = Rng::substream(noise.rng_seed, f * 8 + 1);
      writer.add_detections(
          'A', build_detection_record(t, frame->pixels_in_a, extra_a,
                                      frame->attitude_a.roll,
                                      noise.pixel_noise_sigma, rng_a));
      writer.add_detections(
          'B', build_detection_record(t, frame->pixels_in_b, extra_b,
                                      frame->attitude_b.roll,
                                      noise.pixel_noise_sigma, rng_b));
    } else {
      Rng rng_a = Rng::substream(noise.rng_seed, f * 8 + 0);
      Rng rng_b = Rng::substream(noise.rng_seed, f * 8 + 1);
      std::vector<LightSource> lights_a{{frame->pixels_in_a.left, 1.0},
                                        {frame->pixels_in_a.right, 1.0}};
      std::vector<LightSource> lights_b{{frame->pixels_in_b.left, 1.0},
                                        {frame->pixels_in_b.right, 1.0}};
      for (const auto& d : frame->distractors) {
        const double amp =
            d.kind == DistractorAnnotation::Kind::Reflection ? 0.4 : 0.8;
        for (const auto& p : d.in_a) lights_a.push_back({p, amp});
        for (const auto& p : d.in_b) lights_b.push_back({p, amp});
      }
      const auto& ka = cfg.intrinsics_a;
      const auto& kb = cfg.intrinsics_b;
      writer.add_image('A', t,
                       render_beam_image(ka.image_width, ka.image_height,
                                         lights_a, {ka.cx, ka.cy}, noise, rng_a));
      writer.add_image('B', t,
                       render_beam_image(kb.image_width, kb.image_height,
                                         lights_b, {kb.cx, kb.cy}, noise, rng_b));
    }
  }

  // sensor streams at their own rates
  const auto add_node_sensors = [&](char node) {
    const int purpose = node == 'A' ? 4 : 5;
    const int n_imu = static_cast<int>(spec.duration_s * spec.imu_rate_hz) + 1;
    for (int i = 0; i < n_imu; ++i) {
      const double t = i / spec.imu_rate_hz;
      Rng rng = Rng::substream(noise.rng_seed, std::uint64_t(i) * 8 + purpose);
      const ScenePose sc = scene_at(spec, t);
      const auto pos = node == 'A' ? sc.position_a : sc.position_b;
      const auto ori = node == 'A' ? sc.orientation_a : sc.orientation_b;
      const auto s = synth_sensors(pos, ori, t, cfg.magnetic_field, noise, rng);
      writer.add_imu(node, s.imu);
      if (i % std::max(1, int(spec.imu_rate_hz / spec.mag_rate_hz)) == 0) {
        writer.add_mag(node, s.mag);
      }
      if (i % std::max(1, int(spec.imu_rate_hz / spec.depth_rate_hz)) == 0) {
        writer.add_depth(node, s.depth);
      }
    }
  };
  add_node_sensors('A');
  add_node_sensors('B');

  writer.finalize();
  return result;
}

std::vector<SpacingCell> spacing_sweep(const std::vector<double>& d_values,
                                       const std::vector<double>& ranges,
                                       const NoiseModel& noise, int trials) {
  std::vector<SpacingCell> cells;
  cells.reserve(d_values.size() * ranges.size());
  std::uint64_t cell_index = 0;
  for (const double d : d_values) {
    for (const double range : ranges) {
      const TwoNodeConfig cfg = TwoNodeConfig::standard(d);
      SpacingCell cell;
      cell.d = d;
      cell.range = range;
      double sum_sq = 0;
      int n_ok = 0;
      for (int trial = 0; trial < trials; ++trial) {
        Rng rng = Rng::substream(noise.rng_seed,
                                 cell_index * 1000003ULL + trial);
        ScenePose scene;
        scene.timestamp = 0;
        scene.position_a = Eigen::Vector3d(0, 0, 12.0);
        scene.position_b =
            scene.position_a +
            Eigen::Vector3d(range, rng.uniform(-0.2, 0.2) * range,
                            rng.uniform(-0.1, 0.1) * range);
        scene.orientation_a = look_at(scene.position_b - scene.position_a) *
                              wobble(rng.uniform(0, 10), 2.0, 7.0, 0.0);
        scene.orientation_b = look_at(scene.position_a - scene.position_b) *
                              wobble(rng.uniform(0, 10), 2.0, 7.0, 1.0);
        try {
          const LandmarkProjection proj = render_landmarks(scene, cfg);
          const auto jit = [&](PixelPointd p) {
            return PixelPointd{p.u + rng.normal(0, noise.pixel_noise_sigma),
                               p.v + rng.normal(0, noise.pixel_noise_sigma)};
          };
          const PixelPaird det_a{jit(proj.in_a.left), jit(proj.in_a.right)};
          const PixelPaird det_b{jit(proj.in_b.left), jit(proj.in_b.right)};
          const auto sol = solve_relative_pose<double>(
              det_a, det_b, cfg.intrinsics_a, cfg.intrinsics_b,
              cfg.geometry_a, cfg.geometry_b);
          const double true_range =
              (scene.position_b - scene.position_a).norm();
          const double err = sol.pose.range - true_range;
          sum_sq += err * err;
          ++n_ok;
        } catch (const NotVisibleError&) {
        } catch (const GeometryError&) {
        }
      }
      cell.trials = n_ok;
      cell.rms_range_error = n_ok > 0 ? std::sqrt(sum_sq / n_ok) : 0.0;
      cells.push_back(cell);
      ++cell_index;
    }
  }
  return cells;
}

}  // namespace uwcl
