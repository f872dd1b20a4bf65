#include "uwcl/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace uwcl {

namespace {

struct TruthPixels {
  PixelPaird in_a, in_b;
};

// truth/pixels.csv rows keyed by timestamp, when present
std::map<double, TruthPixels> load_truth_pixels(const std::filesystem::path& root) {
  std::map<double, TruthPixels> out;
  std::ifstream in(root / "truth" / "pixels.csv");
  if (!in) return out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    std::vector<double> f;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        f.push_back(std::strtod(cur.c_str(), nullptr));
        cur.clear();
      } else if (c != '\r') {
        cur.push_back(c);
      }
    }
    f.push_back(std::strtod(cur.c_str(), nullptr));
    if (f.size() != 9) continue;
    TruthPixels tp;
    tp.in_a = {{f[1], f[2]}, {f[3], f[4]}};
    tp.in_b = {{f[5], f[6]}, {f[7], f[8]}};
    out[f[0]] = tp;
  }
  return out;
}

bool pair_matches_truth_indices(const CandidatePair& chosen,
                                const std::array<int, 2>& truth) {
  return (chosen.left == truth[0] && chosen.right == truth[1]) ||
         (chosen.left == truth[1] && chosen.right == truth[0]);
}

bool pair_matches_truth_pixels(const MarkerCandidate& l,
                               const MarkerCandidate& r,
                               const PixelPaird& truth, double radius) {
  const auto close = [radius](const PixelPointd& a, const PixelPointd& b) {
    return std::hypot(a.u - b.u, a.v - b.v) <= radius;
  };
  return (close(l.position, truth.left) && close(r.position, truth.right)) ||
         (close(l.position, truth.right) && close(r.position, truth.left));
}

}  // namespace

SolveRunSummary solve_dataset(const Dataset& ds, const SolveOptions& opts,
                              std::vector<FrameOutcome>* per_frame) {
  const DatasetManifest& m = ds.manifest();
  SolveRunSummary summary;
  summary.frames_a = static_cast<int>(ds.frames_a().size());
  summary.frames_b = static_cast<int>(ds.frames_b().size());

  const double sync_tol =
      opts.sync_tolerance >= 0 ? opts.sync_tolerance : m.sync_tolerance_s;
  const auto pairs = time_align(ds.frames_a(), ds.frames_b(), sync_tol);
  summary.paired = static_cast<int>(pairs.size());

  DetectionConfig det_cfg;
  if (opts.detection_override) {
    det_cfg = *opts.detection_override;
  } else if (auto preset = environment_preset(m.environment)) {
    det_cfg = *preset;
  }

  const bool rendered = m.mode == "rendered";
  const auto truth_pixels =
      rendered ? load_truth_pixels(ds.root()) : std::map<double, TruthPixels>{};

  SelectionConfig sel_cfg;
  sel_cfg.gates = opts.gates;
  sel_cfg.use_sensors = opts.use_sensors;

  for (const auto& sample : pairs) {
    FrameOutcome outcome;
    outcome.t_a = sample.frame_a.timestamp;
    outcome.t_b = sample.frame_b.timestamp;

    std::optional<AttitudeEstimate> snap_a, snap_b;
    if (opts.use_sensors) {
      try {
        snap_a = ds.log_a().snapshot_at(sample.frame_a.timestamp);
      } catch (const SensorError&) {
      }
      try {
        snap_b = ds.log_b().snapshot_at(sample.frame_b.timestamp);
      } catch (const SensorError&) {
      }
    }

    std::vector<MarkerCandidate> cands_a, cands_b;
    std::vector<CandidatePair> pairs_a, pairs_b;
    std::optional<std::array<int, 2>> truth_a, truth_b;
    if (!rendered) {
      if (sample.frame_a.detections) {
        cands_a = sample.frame_a.detections->candidates;
        pairs_a = sample.frame_a.detections->pairs;
        truth_a = sample.frame_a.detections->truth_indices;
      }
      if (sample.frame_b.detections) {
        cands_b = sample.frame_b.detections->candidates;
        pairs_b = sample.frame_b.detections->pairs;
        truth_b = sample.frame_b.detections->truth_indices;
      }
    } else {
      const FrameDetections da = detect_markers(
          ds.load_image(sample.frame_a), det_cfg, snap_a ? snap_a->roll : 0.0);
      const FrameDetections db = detect_markers(
          ds.load_image(sample.frame_b), det_cfg, snap_b ? snap_b->roll : 0.0);
      cands_a = da.candidates;
      pairs_a = da.pairs;
      cands_b = db.candidates;
      pairs_b = db.pairs;
    }

    const auto selection = select_best_pair(
        cands_a, pairs_a, cands_b, pairs_b, snap_a, snap_b, m.intrinsics_a,
        m.intrinsics_b, m.geometry_a, m.geometry_b, sel_cfg,
        per_frame ? &outcome.audit : nullptr);

    TrajectoryRecord rec;
    rec.timestamp = sample.frame_a.timestamp;
    if (selection) {
      rec.pose = selection->solution.pose;
      rec.valid = true;
      rec.selection_score = selection->gate.score;
      outcome.status = "solved";
      outcome.record = rec;
      outcome.chosen = selection->gate;
      ++summary.solved;
    } else {
      rec.valid = false;
      outcome.status = "NoValidPair";
      ++summary.skipped;
      ++summary.skip_reasons["NoValidPair"];
    }
    summary.trajectory.push_back(rec);

    // selection correctness against ground truth, when annotated
    if (!rendered && truth_a && truth_b) {
      outcome.truth_known = true;
      ++summary.truth_frames;
      if (selection) {
        const CandidatePair& pa = pairs_a[selection->gate.pair_a];
        const CandidatePair& pb = pairs_b[selection->gate.pair_b];
        outcome.correct_selection = pair_matches_truth_indices(pa, *truth_a) &&
                                    pair_matches_truth_indices(pb, *truth_b);
      }
    } else if (rendered && !truth_pixels.empty()) {
      auto it = truth_pixels.find(sample.frame_a.timestamp);
      if (it == truth_pixels.end()) {
        // visible frames only carry rows; nearest within a microsecond
        it = truth_pixels.lower_bound(sample.frame_a.timestamp - 1e-6);
        if (it != truth_pixels.end() &&
            std::abs(it->first - sample.frame_a.timestamp) > 1e-6) {
          it = truth_pixels.end();
        }
      }
      if (it != truth_pixels.end()) {
        outcome.truth_known = true;
        ++summary.truth_frames;
        if (selection) {
          const CandidatePair& pa = pairs_a[selection->gate.pair_a];
          const CandidatePair& pb = pairs_b[selection->gate.pair_b];
          outcome.correct_selection =
              pair_matches_truth_pixels(cands_a[pa.left], cands_a[pa.right],
                                        it->second.in_a, opts.match_radius_px) &&
              pair_matches_truth_pixels(cands_b[pb.left], cands_b[pb.right],
                                        it->second.in_b, opts.match_radius_px);
        }
      }
    }
    if (outcome.correct_selection) ++summary.correct_selections;

    if (per_frame) per_frame->push_back(std::move(outcome));
  }
  return summary;
}

}  // namespace uwcl
