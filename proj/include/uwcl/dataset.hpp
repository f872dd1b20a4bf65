#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "uwcl/geometry.hpp"
#include "uwcl/imaging.hpp"
#include "uwcl/sensors.hpp"
#include "uwcl/simulator.hpp"

namespace uwcl {

enum class DatasetFault {
  ManifestMissing,
  SchemaVersionUnsupported,
  CorruptLog,
  IoFailure,
  MismatchedTimestamps,
};

inline const char* to_string(DatasetFault f) {
  switch (f) {
    case DatasetFault::ManifestMissing: return "ManifestMissing";
    case DatasetFault::SchemaVersionUnsupported: return "SchemaVersionUnsupported";
    case DatasetFault::CorruptLog: return "CorruptLog";
    case DatasetFault::IoFailure: return "IoFailure";
    case DatasetFault::MismatchedTimestamps: return "MismatchedTimestamps";
  }
  return "Unknown";
}

class DatasetError : public std::runtime_error {
 public:
  DatasetError(DatasetFault fault, const std::string& what)
      : std::runtime_error(std::string(to_string(fault)) + ": " + what),
        fault_(fault) {}
  DatasetFault fault() const { return fault_; }

 private:
  DatasetFault fault_;
};

inline constexpr int kSchemaVersion = 1;
inline constexpr double kDefaultSyncTolerance = 0.05;  // s

struct DatasetManifest {
  int schema_version = kSchemaVersion;
  std::string mode = "detections";  ///< "detections" | "rendered"
  std::string environment = "clear_day";
  double frame_rate_hz = 5.0;
  double sync_tolerance_s = kDefaultSyncTolerance;
  double declination_rad = 0.0;
  CameraIntrinsicsd intrinsics_a, intrinsics_b;
  NodeGeometryd geometry_a, geometry_b;
  std::optional<NoiseModel> noise;  ///< recorded for synthetic datasets
  int frame_count_a = 0;
  int frame_count_b = 0;
};

/// Stored detections for one frame of one node.
struct DetectionRecord {
  double timestamp = 0;
  std::vector<MarkerCandidate> candidates;
  std::vector<CandidatePair> pairs;
  /// image-ordered candidate indices of the true landmark pair, when known
  std::optional<std::array<int, 2>> truth_indices;
};

struct FrameRecord {
  char node = 'A';
  double timestamp = 0;
  std::string image_path;  ///< relative to the dataset root; rendered mode
  std::optional<DetectionRecord> detections;  ///< detections mode
};

/// One time-aligned observation bundle.
struct PairedSample {
  FrameRecord frame_a;
  FrameRecord frame_b;
  double residual = 0;  ///< |t_a - t_b|, seconds
};

struct TrajectoryRecord {
  double timestamp = 0;
  RelativePosed pose;
  bool valid = false;
  double selection_score = 0;
};

/// Greedy nearest-neighbor pairing of the two nodes' frame streams; every
/// frame is used at most once and pairs with residual above the tolerance
/// are dropped. Output is sorted by time.
std::vector<PairedSample> time_align(const std::vector<FrameRecord>& frames_a,
                                     const std::vector<FrameRecord>& frames_b,
                                     double sync_tolerance);

/// CSV schema: t,x,y,z,qw,qx,qy,qz,range,valid,selection_score with
/// 17-significant-digit formatting; round-trips losslessly.
void export_trajectory(const std::vector<TrajectoryRecord>& records,
                       const std::filesystem::path& path);
std::vector<TrajectoryRecord> load_trajectory(const std::filesystem::path& path);

/// Loaded dataset handle; immutable and shareable once constructed.
class Dataset {
 public:
  static Dataset load(const std::filesystem::path& root);

  const DatasetManifest& manifest() const { return manifest_; }
  const std::vector<FrameRecord>& frames_a() const { return frames_a_; }
  const std::vector<FrameRecord>& frames_b() const { return frames_b_; }
  const SensorLog& log_a() const { return log_a_; }
  const SensorLog& log_b() const { return log_b_; }
  bool has_truth() const;
  std::vector<TrajectoryRecord> truth() const;
  RasterImage load_image(const FrameRecord& frame) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  DatasetManifest manifest_;
  std::vector<FrameRecord> frames_a_, frames_b_;
  SensorLog log_a_, log_b_;
};

/// Builds the on-disk layout:
///   manifest.json
///   detections/{A,B}.jsonl         (detections mode)
///   frames/{A,B}/<t_ns>.png        (rendered mode)
///   logs/{A,B}/{imu,mag,depth}.csv
///   truth/poses.csv, truth/pixels.csv   (synthetic)
class DatasetWriter {
 public:
  DatasetWriter(std::filesystem::path root, DatasetManifest manifest);

  void add_detections(char node, const DetectionRecord& rec);
  void add_image(char node, double timestamp, const RasterImage& img);
  void add_imu(char node, const ImuSample& s);
  void add_mag(char node, const MagSample& s);
  void add_depth(char node, const DepthSample& s);
  void add_truth(const TrajectoryRecord& rec);
  void add_truth_pixels(double timestamp, const PixelPaird& in_a,
                        const PixelPaird& in_b);

  /// Writes everything accumulated plus the manifest.
  void finalize();

 private:
  std::filesystem::path root_;
  DatasetManifest manifest_;
  std::vector<DetectionRecord> det_a_, det_b_;
  std::vector<std::pair<double, std::string>> frames_a_, frames_b_;
  std::vector<ImuSample> imu_a_, imu_b_;
  std::vector<MagSample> mag_a_, mag_b_;
  std::vector<DepthSample> depth_a_, depth_b_;
  std::vector<TrajectoryRecord> truth_;
  std::vector<std::string> truth_pixel_rows_;
  bool finalized_ = false;
};

/// 17-significant-digit decimal formatting used by every CSV writer; any
/// finite double survives a write/parse round trip bit-exactly.
std::string format_double(double v);

/// PNG (lossless) and JPEG decode; format chosen by file extension.
RasterImage load_raster(const std::filesystem::path& path);
void save_png(const RasterImage& img, const std::filesystem::path& path);

}  // namespace uwcl
