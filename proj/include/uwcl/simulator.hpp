#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "uwcl/geometry.hpp"
#include "uwcl/imaging.hpp"
#include "uwcl/rng.hpp"
#include "uwcl/sensors.hpp"

namespace uwcl {

class NotVisibleError : public std::runtime_error {
 public:
  explicit NotVisibleError(const std::string& what)
      : std::runtime_error("NotVisible: " + what) {}
};

/// World poses of the two camera frames at one instant. World frame:
/// x north, y east, z down; the water surface is z = 0.
struct ScenePose {
  double timestamp = 0;
  Eigen::Vector3d position_a = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation_a = Eigen::Quaterniond::Identity();  ///< camera->world
  Eigen::Vector3d position_b = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation_b = Eigen::Quaterniond::Identity();
};

/// Ground-truth pose of B's camera expressed in A's camera frame.
RelativePosed relative_pose_of(const ScenePose& scene);

/// Camera orientation looking along `forward` with image-down as close to
/// world-down as possible.
Eigen::Quaterniond look_at(const Eigen::Vector3d& forward);

struct NoiseModel {
  double pixel_noise_sigma = 0;   ///< px, jitter on stored detections
  double accel_noise_sigma = 0;   ///< m/s^2
  double mag_noise_sigma = 0;     ///< microtesla
  double depth_noise_sigma = 0;   ///< m
  double distractor_rate = 0;     ///< expected distractor events per frame
  double beam_elongation = 0;     ///< px, beam decay length in rendered images
  std::uint64_t rng_seed = 0;

  // rendering details
  double beam_width_sigma = 2.5;  ///< px, cross-beam Gaussian width
  double image_noise_sigma = 0;   ///< normalized intensity noise
  double snow_rate = 0;           ///< expected speckles per rendered frame
  double reflection_share = 0.5;  ///< reflections vs stray lights
};

/// Default world magnetic field, microtesla. Any fixed field serves for
/// relative yaw; the value is an arbitrary mid-latitude choice.
inline Eigen::Vector3d default_magnetic_field() {
  return {22.0, 0.0, -42.0};
}

struct DistractorAnnotation {
  enum class Kind { Reflection, StrayLight };
  Kind kind = Kind::Reflection;
  // pixel positions appended to each image's candidate list (may be empty
  // for one image when the artifact is out of view)
  std::vector<PixelPointd> in_a;
  std::vector<PixelPointd> in_b;
};

/// One fully annotated synthetic observation.
struct SyntheticFrame {
  double timestamp = 0;
  RelativePosed truth;
  PixelPaird pixels_in_a;  ///< true projections of B's landmarks, image-ordered
  PixelPaird pixels_in_b;  ///< true projections of A's landmarks, image-ordered
  std::vector<DistractorAnnotation> distractors;
  AttitudeEstimate attitude_a, attitude_b;  ///< noise-free reference
};

struct TwoNodeConfig {
  CameraIntrinsicsd intrinsics_a;
  CameraIntrinsicsd intrinsics_b;
  NodeGeometryd geometry_a = NodeGeometryd::symmetric(0.88);
  NodeGeometryd geometry_b = NodeGeometryd::symmetric(0.88);
  Eigen::Vector3d magnetic_field = default_magnetic_field();
  double declination = 0;
  double floor_depth = 14.0;        ///< reflection mirror plane, m below surface
  double lamp_height = 1.5;         ///< stray light height above the landmark line, m

  static TwoNodeConfig standard(double d = 0.88);
};

/// Wide-FoV camera used by the standard synthetic rig.
CameraIntrinsicsd default_intrinsics();

/// True pixel positions of each node's landmarks in the other node's image,
/// image-ordered. Throws NotVisibleError when a landmark leaves a camera's
/// view or falls behind it.
struct LandmarkProjection {
  PixelPaird in_a;
  PixelPaird in_b;
};
LandmarkProjection render_landmarks(const ScenePose& scene,
                                    const TwoNodeConfig& cfg);

/// Per-image light sources for the beam renderer.
struct LightSource {
  PixelPointd pixel;
  double amplitude = 1.0;
};

/// Renders landmarks (and distractors) as anisotropic beam cones:
/// brightest at the source pixel, decaying along the beam direction over
/// beam_elongation px, with Gaussian cross-section. Adds speckle "snow"
/// and per-pixel intensity noise from the given stream.
RasterImage render_beam_image(int width, int height,
                              const std::vector<LightSource>& lights,
                              const PixelPointd& principal_point,
                              const NoiseModel& noise, Rng& rng);

struct NodeSensorSamples {
  ImuSample imu;
  MagSample mag;
  DepthSample depth;
};

/// Noisy sensor samples for one node at the scene timestamp.
NodeSensorSamples synth_sensors(const Eigen::Vector3d& position,
                                const Eigen::Quaterniond& camera_orientation,
                                double timestamp,
                                const Eigen::Vector3d& magnetic_field,
                                const NoiseModel& noise, Rng& rng);

/// Analytic motion of node B around a stationary node A.
struct TrajectorySpec {
  enum class Path { Static, Line, Circle, Lawnmower };
  Path path = Path::Circle;
  double duration_s = 60.0;
  double frame_rate_hz = 5.0;
  double imu_rate_hz = 50.0;
  double mag_rate_hz = 25.0;
  double depth_rate_hz = 10.0;
  double base_depth = 12.0;    ///< m below surface
  double radius = 2.0;         ///< circle radius, m
  double center_range = 4.0;   ///< circle center distance from A, m
  double start_range = 1.5;    ///< line start, m
  double end_range = 10.0;     ///< line end, m
  double leg_length = 6.0;     ///< lawnmower east-west extent, m
  double leg_spacing = 1.5;    ///< lawnmower north advance per leg, m
  double static_range = 3.0;   ///< static station distance, m
  double wobble_deg = 2.0;     ///< attitude wobble amplitude
  double wobble_period_s = 7.0;
  double depth_swing = 0.5;    ///< vertical oscillation amplitude, m
};

/// Scene at time t under the spec; poses are smooth analytic functions so
/// any sampling of the same spec agrees exactly.
ScenePose scene_at(const TrajectorySpec& spec, double t);

/// Assembles the fully annotated frame at time t; distractor sampling and
/// measurement noise use per-frame substreams of noise.rng_seed.
/// Returns nothing when a landmark is out of view (frame flagged invalid).
std::optional<SyntheticFrame> synthesize_frame(const TrajectorySpec& spec,
                                               const TwoNodeConfig& cfg,
                                               const NoiseModel& noise,
                                               std::uint64_t frame_index);

struct GeneratedDataset {
  std::filesystem::path root;
  int frames_total = 0;
  int frames_visible = 0;
};

/// Writes a complete dataset (manifest, frames or detections, sensor logs,
/// ground truth) under out_dir. Identical spec/noise/seed produce
/// byte-identical trees.
GeneratedDataset generate_trajectory(const TrajectorySpec& spec,
                                     const TwoNodeConfig& cfg,
                                     const NoiseModel& noise,
                                     const std::string& environment,
                                     bool rendered,
                                     const std::filesystem::path& out_dir);

struct SpacingCell {
  double d = 0;
  double range = 0;
  double rms_range_error = 0;
  int trials = 0;
};

/// Monte-Carlo RMS range error of the full solver over a d x range grid
/// under the given noise model.
std::vector<SpacingCell> spacing_sweep(const std::vector<double>& d_values,
                                       const std::vector<double>& ranges,
                                       const NoiseModel& noise, int trials);

}  // namespace uwcl
