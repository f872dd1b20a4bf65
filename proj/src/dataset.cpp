#include "uwcl/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace uwcl {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

double parse_double(const std::string& field, const std::string& file,
                    int line) {
  const char* begin = field.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE) {
    throw DatasetError(DatasetFault::CorruptLog,
                       file + " line " + std::to_string(line) +
                           ": bad numeric field '" + field + "'");
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

json intrinsics_to_json(const CameraIntrinsicsd& k) {
  return json{{"fx", k.fx},
              {"fy", k.fy},
              {"cx", k.cx},
              {"cy", k.cy},
              {"image_width", k.image_width},
              {"image_height", k.image_height},
              {"radial_distortion",
               {k.radial_distortion[0], k.radial_distortion[1]}}};
}

CameraIntrinsicsd intrinsics_from_json(const json& j) {
  CameraIntrinsicsd k;
  k.fx = j.at("fx");
  k.fy = j.at("fy");
  k.cx = j.at("cx");
  k.cy = j.at("cy");
  k.image_width = j.at("image_width");
  k.image_height = j.at("image_height");
  k.radial_distortion[0] = j.at("radial_distortion")[0];
  k.radial_distortion[1] = j.at("radial_distortion")[1];
  return k;
}

json geometry_to_json(const NodeGeometryd& g) {
  return json{{"d", g.d},
              {"left_offset", {g.left_offset[0], g.left_offset[1], g.left_offset[2]}},
              {"right_offset",
               {g.right_offset[0], g.right_offset[1], g.right_offset[2]}}};
}

NodeGeometryd geometry_from_json(const json& j) {
  NodeGeometryd g;
  g.d = j.at("d");
  for (int i = 0; i < 3; ++i) {
    g.left_offset[i] = j.at("left_offset")[i];
    g.right_offset[i] = j.at("right_offset")[i];
  }
  return g;
}

json noise_to_json(const NoiseModel& n) {
  return json{{"pixel_noise_sigma", n.pixel_noise_sigma},
              {"accel_noise_sigma", n.accel_noise_sigma},
              {"mag_noise_sigma", n.mag_noise_sigma},
              {"depth_noise_sigma", n.depth_noise_sigma},
              {"distractor_rate", n.distractor_rate},
              {"beam_elongation", n.beam_elongation},
              {"rng_seed", n.rng_seed},
              {"beam_width_sigma", n.beam_width_sigma},
              {"image_noise_sigma", n.image_noise_sigma},
              {"snow_rate", n.snow_rate},
              {"reflection_share", n.reflection_share}};
}

NoiseModel noise_from_json(const json& j) {
  NoiseModel n;
  n.pixel_noise_sigma = j.at("pixel_noise_sigma");
  n.accel_noise_sigma = j.at("accel_noise_sigma");
  n.mag_noise_sigma = j.at("mag_noise_sigma");
  n.depth_noise_sigma = j.at("depth_noise_sigma");
  n.distractor_rate = j.at("distractor_rate");
  n.beam_elongation = j.at("beam_elongation");
  n.rng_seed = j.at("rng_seed");
  n.beam_width_sigma = j.value("beam_width_sigma", 2.5);
  n.image_noise_sigma = j.value("image_noise_sigma", 0.0);
  n.snow_rate = j.value("snow_rate", 0.0);
  n.reflection_share = j.value("reflection_share", 0.5);
  return n;
}

json detection_to_json(const DetectionRecord& rec) {
  json cands = json::array();
  for (const auto& c : rec.candidates) {
    cands.push_back({{"u", c.position.u},
                     {"v", c.position.v},
                     {"brightness", c.brightness_score}});
  }
  json pairs = json::array();
  for (const auto& p : rec.pairs) {
    pairs.push_back({{"left", p.left},
                     {"right", p.right},
                     {"separation_px", p.separation_px}});
  }
  json j{{"t", rec.timestamp}, {"candidates", cands}, {"pairs", pairs}};
  if (rec.truth_indices) {
    j["truth"] = {(*rec.truth_indices)[0], (*rec.truth_indices)[1]};
  }
  return j;
}

DetectionRecord detection_from_json(const json& j) {
  DetectionRecord rec;
  rec.timestamp = j.at("t");
  int idx = 0;
  for (const auto& c : j.at("candidates")) {
    MarkerCandidate m;
    m.position.u = c.at("u");
    m.position.v = c.at("v");
    m.brightness_score = c.at("brightness");
    m.source_blob = idx++;
    rec.candidates.push_back(m);
  }
  if (j.contains("pairs")) {
    for (const auto& p : j.at("pairs")) {
      CandidatePair cp;
      cp.left = p.at("left");
      cp.right = p.at("right");
      cp.separation_px = p.at("separation_px");
      rec.pairs.push_back(cp);
    }
  }
  if (j.contains("truth")) {
    rec.truth_indices = std::array<int, 2>{j.at("truth")[0], j.at("truth")[1]};
  }
  return rec;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) {
    throw DatasetError(DatasetFault::IoFailure,
                       "cannot write " + path.string());
  }
}

}  // namespace

std::vector<PairedSample> time_align(const std::vector<FrameRecord>& frames_a,
                                     const std::vector<FrameRecord>& frames_b,
                                     double sync_tolerance) {
  struct Cand {
    double resid;
    std::size_t i, j;
  };
  std::vector<Cand> cands;
  std::size_t lo = 0;
  for (std::size_t i = 0; i < frames_a.size(); ++i) {
    const double ta = frames_a[i].timestamp;
    while (lo < frames_b.size() &&
           frames_b[lo].timestamp < ta - sync_tolerance) {
      ++lo;
    }
    for (std::size_t j = lo; j < frames_b.size() &&
                             frames_b[j].timestamp <= ta + sync_tolerance;
         ++j) {
      cands.push_back({std::abs(frames_b[j].timestamp - ta), i, j});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.resid != y.resid) return x.resid < y.resid;
    if (x.i != y.i) return x.i < y.i;
    return x.j < y.j;
  });
  std::vector<std::uint8_t> used_a(frames_a.size(), 0), used_b(frames_b.size(), 0);
  std::vector<PairedSample> out;
  for (const auto& c : cands) {
    if (used_a[c.i] || used_b[c.j]) continue;
    used_a[c.i] = used_b[c.j] = 1;
    out.push_back({frames_a[c.i], frames_b[c.j], c.resid});
  }
  std::sort(out.begin(), out.end(), [](const PairedSample& x, const PairedSample& y) {
    return x.frame_a.timestamp < y.frame_a.timestamp;
  });
  return out;
}

void export_trajectory(const std::vector<TrajectoryRecord>& records,
                       const std::filesystem::path& path) {
  std::ostringstream out;
  out << "t,x,y,z,qw,qx,qy,qz,range,valid,selection_score\n";
  for (const auto& r : records) {
    out << format_double(r.timestamp) << ',' << format_double(r.pose.translation.x())
        << ',' << format_double(r.pose.translation.y()) << ','
        << format_double(r.pose.translation.z()) << ','
        << format_double(r.pose.rotation.w()) << ','
        << format_double(r.pose.rotation.x()) << ','
        << format_double(r.pose.rotation.y()) << ','
        << format_double(r.pose.rotation.z()) << ','
        << format_double(r.pose.range) << ',' << (r.valid ? 1 : 0) << ','
        << format_double(r.selection_score) << '\n';
  }
  write_text_file(path, out.str());
}

std::vector<TrajectoryRecord> load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DatasetError(DatasetFault::IoFailure, "cannot read " + path.string());
  }
  const std::string fname = path.filename().string();
  std::string line;
  std::vector<TrajectoryRecord> out;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;  // header
    const auto f = split_csv(line);
    if (f.size() != 11) {
      throw DatasetError(DatasetFault::CorruptLog,
                         fname + " line " + std::to_string(lineno) +
                             ": expected 11 fields, got " +
                             std::to_string(f.size()));
    }
    TrajectoryRecord r;
    r.timestamp = parse_double(f[0], fname, lineno);
    r.pose.translation = Eigen::Vector3d(parse_double(f[1], fname, lineno),
                                         parse_double(f[2], fname, lineno),
                                         parse_double(f[3], fname, lineno));
    r.pose.rotation = Eigen::Quaterniond(parse_double(f[4], fname, lineno),
                                         parse_double(f[5], fname, lineno),
                                         parse_double(f[6], fname, lineno),
                                         parse_double(f[7], fname, lineno));
    r.pose.range = parse_double(f[8], fname, lineno);
    r.valid = parse_double(f[9], fname, lineno) != 0.0;
    r.selection_score = parse_double(f[10], fname, lineno);
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset

namespace {

std::vector<ImuSample> load_imu_csv(const std::filesystem::path& path) {
  std::vector<ImuSample> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  int lineno = 0;
  const std::string fname = path.filename().string();
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 7) {
      throw DatasetError(DatasetFault::CorruptLog,
                         fname + " line " + std::to_string(lineno) +
                             ": expected 7 fields, got " + std::to_string(f.size()));
    }
    ImuSample s;
    s.timestamp = parse_double(f[0], fname, lineno);
    s.accel = Eigen::Vector3d(parse_double(f[1], fname, lineno),
                              parse_double(f[2], fname, lineno),
                              parse_double(f[3], fname, lineno));
    s.gyro = Eigen::Vector3d(parse_double(f[4], fname, lineno),
                             parse_double(f[5], fname, lineno),
                             parse_double(f[6], fname, lineno));
    out.push_back(s);
  }
  return out;
}

std::vector<MagSample> load_mag_csv(const std::filesystem::path& path) {
  std::vector<MagSample> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  int lineno = 0;
  const std::string fname = path.filename().string();
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) {
      throw DatasetError(DatasetFault::CorruptLog,
                         fname + " line " + std::to_string(lineno) +
                             ": expected 4 fields, got " + std::to_string(f.size()));
    }
    MagSample s;
    s.timestamp = parse_double(f[0], fname, lineno);
    s.mag = Eigen::Vector3d(parse_double(f[1], fname, lineno),
                            parse_double(f[2], fname, lineno),
                            parse_double(f[3], fname, lineno));
    out.push_back(s);
  }
  return out;
}

std::vector<DepthSample> load_depth_csv(const std::filesystem::path& path) {
  std::vector<DepthSample> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  int lineno = 0;
  const std::string fname = path.filename().string();
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 2) {
      throw DatasetError(DatasetFault::CorruptLog,
                         fname + " line " + std::to_string(lineno) +
                             ": expected 2 fields, got " + std::to_string(f.size()));
    }
    DepthSample s;
    s.timestamp = parse_double(f[0], fname, lineno);
    s.depth = parse_double(f[1], fname, lineno);
    out.push_back(s);
  }
  return out;
}

std::vector<FrameRecord> load_detection_frames(
    const std::filesystem::path& path, char node) {
  std::vector<FrameRecord> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  int lineno = 0;
  const std::string fname = path.filename().string();
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DatasetError(DatasetFault::CorruptLog,
                         fname + " line " + std::to_string(lineno) + ": " +
                             e.what());
    }
    FrameRecord rec;
    rec.node = node;
    rec.detections = detection_from_json(j);
    rec.timestamp = rec.detections->timestamp;
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<FrameRecord> load_image_frames(const std::filesystem::path& dir,
                                           const std::filesystem::path& root,
                                           char node) {
  std::vector<FrameRecord> out;
  if (!std::filesystem::exists(dir)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext != ".png" && ext != ".jpg" && ext != ".jpeg") continue;
    FrameRecord rec;
    rec.node = node;
    const std::string stem = entry.path().stem().string();
    long long ns = 0;
    const auto res = std::from_chars(stem.data(), stem.data() + stem.size(), ns);
    if (res.ec != std::errc{} || res.ptr != stem.data() + stem.size()) {
      throw DatasetError(DatasetFault::CorruptLog,
                         "frame filename is not a nanosecond timestamp: " +
                             entry.path().filename().string());
    }
    rec.timestamp = static_cast<double>(ns) * 1e-9;
    rec.image_path =
        std::filesystem::relative(entry.path(), root).generic_string();
    out.push_back(std::move(rec));
  }
  std::sort(out.begin(), out.end(), [](const FrameRecord& a, const FrameRecord& b) {
    return a.timestamp < b.timestamp;
  });
  return out;
}

}  // namespace

Dataset Dataset::load(const std::filesystem::path& root) {
  Dataset ds;
  ds.root_ = root;
  const auto manifest_path = root / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw DatasetError(DatasetFault::ManifestMissing,
                       manifest_path.string() + " not found");
  }
  std::ifstream in(manifest_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DatasetError(DatasetFault::CorruptLog,
                       std::string("manifest.json: ") + e.what());
  }
  DatasetManifest& m = ds.manifest_;
  m.schema_version = j.value("schema_version", -1);
  if (m.schema_version != kSchemaVersion) {
    throw DatasetError(DatasetFault::SchemaVersionUnsupported,
                       "schema_version " + std::to_string(m.schema_version));
  }
  m.mode = j.at("mode");
  m.environment = j.value("environment", "");
  m.frame_rate_hz = j.value("frame_rate_hz", 0.0);
  m.sync_tolerance_s = j.value("sync_tolerance_s", kDefaultSyncTolerance);
  m.declination_rad = j.value("declination_rad", 0.0);
  m.intrinsics_a = intrinsics_from_json(j.at("nodes").at("A").at("intrinsics"));
  m.intrinsics_b = intrinsics_from_json(j.at("nodes").at("B").at("intrinsics"));
  m.geometry_a = geometry_from_json(j.at("nodes").at("A").at("geometry"));
  m.geometry_b = geometry_from_json(j.at("nodes").at("B").at("geometry"));
  if (j.contains("noise")) m.noise = noise_from_json(j.at("noise"));
  m.frame_count_a = j.value("frame_count_a", 0);
  m.frame_count_b = j.value("frame_count_b", 0);

  if (m.mode == "detections") {
    ds.frames_a_ = load_detection_frames(root / "detections" / "A.jsonl", 'A');
    ds.frames_b_ = load_detection_frames(root / "detections" / "B.jsonl", 'B');
  } else if (m.mode == "rendered") {
    ds.frames_a_ = load_image_frames(root / "frames" / "A", root, 'A');
    ds.frames_b_ = load_image_frames(root / "frames" / "B", root, 'B');
  } else {
    throw DatasetError(DatasetFault::SchemaVersionUnsupported,
                       "unknown mode '" + m.mode + "'");
  }

  ds.log_a_ = SensorLog(load_imu_csv(root / "logs" / "A" / "imu.csv"),
                        load_mag_csv(root / "logs" / "A" / "mag.csv"),
                        load_depth_csv(root / "logs" / "A" / "depth.csv"),
                        m.declination_rad);
  ds.log_b_ = SensorLog(load_imu_csv(root / "logs" / "B" / "imu.csv"),
                        load_mag_csv(root / "logs" / "B" / "mag.csv"),
                        load_depth_csv(root / "logs" / "B" / "depth.csv"),
                        m.declination_rad);
  return ds;
}

bool Dataset::has_truth() const {
  return std::filesystem::exists(root_ / "truth" / "poses.csv");
}

std::vector<TrajectoryRecord> Dataset::truth() const {
  return load_trajectory(root_ / "truth" / "poses.csv");
}

RasterImage Dataset::load_image(const FrameRecord& frame) const {
  return load_raster(root_ / frame.image_path);
}

// ---------------------------------------------------------------------------
// DatasetWriter

DatasetWriter::DatasetWriter(std::filesystem::path root, DatasetManifest manifest)
    : root_(std::move(root)), manifest_(std::move(manifest)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  std::filesystem::create_directories(root_ / "logs" / "A", ec);
  std::filesystem::create_directories(root_ / "logs" / "B", ec);
  std::filesystem::create_directories(root_ / "truth", ec);
  if (manifest_.mode == "rendered") {
    std::filesystem::create_directories(root_ / "frames" / "A", ec);
    std::filesystem::create_directories(root_ / "frames" / "B", ec);
  } else {
    std::filesystem::create_directories(root_ / "detections", ec);
  }
  if (ec) {
    throw DatasetError(DatasetFault::IoFailure,
                       "cannot create dataset directories under " +
                           root_.string());
  }
}

void DatasetWriter::add_detections(char node, const DetectionRecord& rec) {
  (node == 'A' ? det_a_ : det_b_).push_back(rec);
}

void DatasetWriter::add_image(char node, double timestamp,
                              const RasterImage& img) {
  const long long ns = std::llround(timestamp * 1e9);
  const std::string name = std::to_string(ns) + ".png";
  const auto rel = std::filesystem::path("frames") / std::string(1, node) / name;
  save_png(img, root_ / rel);
  (node == 'A' ? frames_a_ : frames_b_).emplace_back(timestamp,
                                                     rel.generic_string());
}

void DatasetWriter::add_imu(char node, const ImuSample& s) {
  (node == 'A' ? imu_a_ : imu_b_).push_back(s);
}
void DatasetWriter::add_mag(char node, const MagSample& s) {
  (node == 'A' ? mag_a_ : mag_b_).push_back(s);
}
void DatasetWriter::add_depth(char node, const DepthSample& s) {
  (node == 'A' ? depth_a_ : depth_b_).push_back(s);
}
void DatasetWriter::add_truth(const TrajectoryRecord& rec) {
  truth_.push_back(rec);
}

void DatasetWriter::add_truth_pixels(double timestamp, const PixelPaird& in_a,
                                     const PixelPaird& in_b) {
  std::ostringstream row;
  row << format_double(timestamp);
  for (const PixelPointd* p :
       {&in_a.left, &in_a.right, &in_b.left, &in_b.right}) {
    row << ',' << format_double(p->u) << ',' << format_double(p->v);
  }
  truth_pixel_rows_.push_back(row.str());
}

void DatasetWriter::finalize() {
  if (finalized_) return;
  finalized_ = true;

  if (manifest_.mode == "detections") {
    for (const char node : {'A', 'B'}) {
      const auto& recs = node == 'A' ? det_a_ : det_b_;
      std::ostringstream out;
      for (const auto& rec : recs) out << detection_to_json(rec).dump() << '\n';
      write_text_file(root_ / "detections" / (std::string(1, node) + ".jsonl"),
                      out.str());
    }
    manifest_.frame_count_a = static_cast<int>(det_a_.size());
    manifest_.frame_count_b = static_cast<int>(det_b_.size());
  } else {
    manifest_.frame_count_a = static_cast<int>(frames_a_.size());
    manifest_.frame_count_b = static_cast<int>(frames_b_.size());
  }

  for (const char node : {'A', 'B'}) {
    const auto dir = root_ / "logs" / std::string(1, node);
    {
      std::ostringstream out;
      out << "t,ax,ay,az,gx,gy,gz\n";
      for (const auto& s : node == 'A' ? imu_a_ : imu_b_) {
        out << format_double(s.timestamp);
        for (int i = 0; i < 3; ++i) out << ',' << format_double(s.accel[i]);
        for (int i = 0; i < 3; ++i) out << ',' << format_double(s.gyro[i]);
        out << '\n';
      }
      write_text_file(dir / "imu.csv", out.str());
    }
    {
      std::ostringstream out;
      out << "t,mx,my,mz\n";
      for (const auto& s : node == 'A' ? mag_a_ : mag_b_) {
        out << format_double(s.timestamp);
        for (int i = 0; i < 3; ++i) out << ',' << format_double(s.mag[i]);
        out << '\n';
      }
      write_text_file(dir / "mag.csv", out.str());
    }
    {
      std::ostringstream out;
      out << "t,depth_m\n";
      for (const auto& s : node == 'A' ? depth_a_ : depth_b_) {
        out << format_double(s.timestamp) << ',' << format_double(s.depth)
            << '\n';
      }
      write_text_file(dir / "depth.csv", out.str());
    }
  }

  if (!truth_.empty()) {
    export_trajectory(truth_, root_ / "truth" / "poses.csv");
  }
  if (!truth_pixel_rows_.empty()) {
    std::ostringstream out;
    out << "t,ul_a,vl_a,ur_a,vr_a,ul_b,vl_b,ur_b,vr_b\n";
    for (const auto& row : truth_pixel_rows_) out << row << '\n';
    write_text_file(root_ / "truth" / "pixels.csv", out.str());
  }

  json nodes{{"A",
              {{"intrinsics", intrinsics_to_json(manifest_.intrinsics_a)},
               {"geometry", geometry_to_json(manifest_.geometry_a)}}},
             {"B",
              {{"intrinsics", intrinsics_to_json(manifest_.intrinsics_b)},
               {"geometry", geometry_to_json(manifest_.geometry_b)}}}};
  json j{{"schema_version", manifest_.schema_version},
         {"mode", manifest_.mode},
         {"environment", manifest_.environment},
         {"frame_rate_hz", manifest_.frame_rate_hz},
         {"sync_tolerance_s", manifest_.sync_tolerance_s},
         {"declination_rad", manifest_.declination_rad},
         {"nodes", nodes},
         {"frame_count_a", manifest_.frame_count_a},
         {"frame_count_b", manifest_.frame_count_b}};
  if (manifest_.noise) j["noise"] = noise_to_json(*manifest_.noise);
  write_text_file(root_ / "manifest.json", j.dump(2) + "\n");
}

}  // namespace uwcl
