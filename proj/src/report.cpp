#include "uwcl/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace uwcl {

EvalReport evaluate_trajectory(const std::vector<TrajectoryRecord>& estimate,
                               const std::vector<TrajectoryRecord>& truth,
                               double align_tolerance, double bin_width) {
  std::vector<TrajectoryRecord> truth_sorted = truth;
  std::sort(truth_sorted.begin(), truth_sorted.end(),
            [](const TrajectoryRecord& a, const TrajectoryRecord& b) {
              return a.timestamp < b.timestamp;
            });
  std::vector<double> truth_times(truth_sorted.size());
  for (std::size_t i = 0; i < truth_sorted.size(); ++i) {
    truth_times[i] = truth_sorted[i].timestamp;
  }

  EvalReport report;
  for (const auto& est : estimate) {
    if (!est.valid) continue;
    const auto it = std::lower_bound(truth_times.begin(), truth_times.end(),
                                     est.timestamp);
    std::size_t best = truth_times.size();
    double best_dt = align_tolerance;
    for (const auto idx : {it == truth_times.begin() ? it : it - 1, it}) {
      if (idx == truth_times.end()) continue;
      const double dt = std::abs(*idx - est.timestamp);
      if (dt <= best_dt) {
        best_dt = dt;
        best = static_cast<std::size_t>(idx - truth_times.begin());
      }
    }
    if (best == truth_times.size()) {
      ++report.unmatched_estimates;
      continue;
    }
    const TrajectoryRecord& tr = truth_sorted[best];
    FrameError fe;
    fe.timestamp = est.timestamp;
    fe.position_error = (est.pose.translation - tr.pose.translation).norm();
    fe.rotation_error = geodesic_angle(est.pose.rotation, tr.pose.rotation);
    fe.distance_error = std::abs(est.pose.range - tr.pose.range);
    fe.range_true = tr.pose.range;
    report.frames.push_back(fe);
  }
  if (report.frames.empty()) {
    throw DatasetError(DatasetFault::MismatchedTimestamps,
                       "no estimate aligns with the ground-truth timeline");
  }

  double range_min = report.frames.front().range_true;
  double range_max = range_min;
  for (const auto& f : report.frames) {
    report.mean_position_error += f.position_error;
    report.max_position_error = std::max(report.max_position_error, f.position_error);
    report.mean_rotation_error += f.rotation_error;
    report.mean_abs_distance_error += f.distance_error;
    range_min = std::min(range_min, f.range_true);
    range_max = std::max(range_max, f.range_true);
  }
  report.matched = static_cast<int>(report.frames.size());
  report.mean_position_error /= report.matched;
  report.mean_rotation_error /= report.matched;
  report.mean_abs_distance_error /= report.matched;

  const int first_bin = static_cast<int>(std::floor(range_min / bin_width));
  const int last_bin = static_cast<int>(std::floor(range_max / bin_width));
  std::map<int, RangeBin> bins;
  for (const auto& f : report.frames) {
    const int b = std::clamp(static_cast<int>(std::floor(f.range_true / bin_width)),
                             first_bin, last_bin);
    RangeBin& bin = bins[b];
    bin.range_lo = b * bin_width;
    bin.range_hi = (b + 1) * bin_width;
    bin.mean_abs_distance_error += f.distance_error;
    ++bin.count;
  }
  for (auto& [_, bin] : bins) {
    bin.mean_abs_distance_error /= bin.count;
    report.bins.push_back(bin);
  }
  return report;
}

void write_eval_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "t,position_error_m,rotation_error_rad,distance_error_m,range_true_m\n";
  for (const auto& f : report.frames) {
    out << format_double(f.timestamp) << ',' << format_double(f.position_error)
        << ',' << format_double(f.rotation_error) << ','
        << format_double(f.distance_error) << ',' << format_double(f.range_true)
        << '\n';
  }
  out << "\nrange_bin_lo,range_bin_hi,mean_abs_distance_error_m,count\n";
  for (const auto& b : report.bins) {
    out << format_double(b.range_lo) << ',' << format_double(b.range_hi) << ','
        << format_double(b.mean_abs_distance_error) << ',' << b.count << '\n';
  }
  std::ofstream f(path, std::ios::binary);
  f << out.str();
  if (!f) {
    throw DatasetError(DatasetFault::IoFailure, "cannot write " + path.string());
  }
}

namespace {

struct Canvas {
  static constexpr double kW = 720, kH = 440;
  static constexpr double kLeft = 70, kRight = 30, kTop = 30, kBottom = 55;
  double x_min, x_max, y_min, y_max;

  double px(double x) const {
    return kLeft + (x - x_min) / (x_max - x_min) * (kW - kLeft - kRight);
  }
  double py(double y) const {
    return kH - kBottom - (y - y_min) / (y_max - y_min) * (kH - kTop - kBottom);
  }
};

std::string svg_header() {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"440\" "
         "viewBox=\"0 0 720 440\" font-family=\"sans-serif\" font-size=\"12\">\n"
         "<rect width=\"720\" height=\"440\" fill=\"white\"/>\n";
}

void axes(std::ostringstream& out, const Canvas& c, const std::string& x_label,
          const std::string& y_label) {
  out << "<line x1=\"" << c.px(c.x_min) << "\" y1=\"" << c.py(c.y_min)
      << "\" x2=\"" << c.px(c.x_max) << "\" y2=\"" << c.py(c.y_min)
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << c.px(c.x_min) << "\" y1=\"" << c.py(c.y_min)
      << "\" x2=\"" << c.px(c.x_min) << "\" y2=\"" << c.py(c.y_max)
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = c.x_min + (c.x_max - c.x_min) * i / 4.0;
    const double y = c.y_min + (c.y_max - c.y_min) * i / 4.0;
    out << "<text x=\"" << c.px(x) << "\" y=\"" << Canvas::kH - 35
        << "\" text-anchor=\"middle\">" << std::round(x * 1000) / 1000
        << "</text>\n";
    out << "<text x=\"" << Canvas::kLeft - 8 << "\" y=\"" << c.py(y) + 4
        << "\" text-anchor=\"end\">" << std::round(y * 1000) / 1000
        << "</text>\n";
  }
  out << "<text x=\"" << (Canvas::kW + Canvas::kLeft - Canvas::kRight) / 2
      << "\" y=\"" << Canvas::kH - 12 << "\" text-anchor=\"middle\">" << x_label
      << "</text>\n";
  out << "<text x=\"16\" y=\"" << Canvas::kH / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << Canvas::kH / 2 << ")\">" << y_label << "</text>\n";
}

}  // namespace

void write_error_curve_svg(const std::vector<RangeBin>& bins,
                           double reference_level,
                           const std::filesystem::path& path) {
  Canvas c{};
  c.x_min = bins.front().range_lo;
  c.x_max = bins.back().range_hi;
  c.y_min = 0;
  c.y_max = reference_level;
  for (const auto& b : bins) {
    c.y_max = std::max(c.y_max, b.mean_abs_distance_error);
  }
  c.y_max *= 1.15;
  if (c.y_max <= 0) c.y_max = 1e-9;

  std::ostringstream out;
  out << svg_header();
  axes(out, c, "range (m)", "mean abs distance error (m)");

  out << "<polyline fill=\"none\" stroke=\"#1565c0\" stroke-width=\"2\" points=\"";
  for (const auto& b : bins) {
    out << c.px(0.5 * (b.range_lo + b.range_hi)) << ','
        << c.py(b.mean_abs_distance_error) << ' ';
  }
  out << "\"/>\n";
  for (const auto& b : bins) {
    out << "<circle cx=\"" << c.px(0.5 * (b.range_lo + b.range_hi)) << "\" cy=\""
        << c.py(b.mean_abs_distance_error) << "\" r=\"3\" fill=\"#1565c0\"/>\n";
  }
  if (reference_level > 0) {
    out << "<line x1=\"" << c.px(c.x_min) << "\" y1=\"" << c.py(reference_level)
        << "\" x2=\"" << c.px(c.x_max) << "\" y2=\"" << c.py(reference_level)
        << "\" stroke=\"#c62828\" stroke-dasharray=\"6 4\"/>\n";
    out << "<text x=\"" << c.px(c.x_max) - 4 << "\" y=\""
        << c.py(reference_level) - 6
        << "\" text-anchor=\"end\" fill=\"#c62828\">reference "
        << reference_level << " m</text>\n";
  }
  out << "</svg>\n";

  std::ofstream f(path, std::ios::binary);
  f << out.str();
  if (!f) {
    throw DatasetError(DatasetFault::IoFailure, "cannot write " + path.string());
  }
}

void write_spacing_csv(const std::vector<SpacingCell>& cells,
                       const std::filesystem::path& path) {
  std::ostringstream out;
  out << "d_m,range_m,rms_range_error_m,trials\n";
  for (const auto& c : cells) {
    out << format_double(c.d) << ',' << format_double(c.range) << ','
        << format_double(c.rms_range_error) << ',' << c.trials << '\n';
  }
  std::ofstream f(path, std::ios::binary);
  f << out.str();
  if (!f) {
    throw DatasetError(DatasetFault::IoFailure, "cannot write " + path.string());
  }
}

void write_spacing_svg(const std::vector<SpacingCell>& cells,
                       const std::filesystem::path& path) {
  std::vector<double> ds, ranges;
  double max_err = 0;
  for (const auto& c : cells) {
    if (std::find(ds.begin(), ds.end(), c.d) == ds.end()) ds.push_back(c.d);
    if (std::find(ranges.begin(), ranges.end(), c.range) == ranges.end()) {
      ranges.push_back(c.range);
    }
    max_err = std::max(max_err, c.rms_range_error);
  }
  std::sort(ds.begin(), ds.end());
  std::sort(ranges.begin(), ranges.end());
  if (max_err <= 0) max_err = 1e-12;

  const double cell_w = (720.0 - 140) / ranges.size();
  const double cell_h = (440.0 - 110) / ds.size();

  std::ostringstream out;
  out << svg_header();
  for (const auto& c : cells) {
    const auto xi = std::find(ranges.begin(), ranges.end(), c.range) - ranges.begin();
    const auto yi = std::find(ds.begin(), ds.end(), c.d) - ds.begin();
    const double frac = c.rms_range_error / max_err;
    const int red = static_cast<int>(40 + 215 * frac);
    const int blue = static_cast<int>(200 - 160 * frac);
    out << "<rect x=\"" << 90 + xi * cell_w << "\" y=\"" << 30 + yi * cell_h
        << "\" width=\"" << cell_w - 2 << "\" height=\"" << cell_h - 2
        << "\" fill=\"rgb(" << red << ",60," << blue << ")\"/>\n";
    out << "<text x=\"" << 90 + xi * cell_w + cell_w / 2 << "\" y=\""
        << 30 + yi * cell_h + cell_h / 2 + 4
        << "\" text-anchor=\"middle\" fill=\"white\">"
        << std::round(c.rms_range_error * 1000) / 1000 << "</text>\n";
  }
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    out << "<text x=\"" << 90 + i * cell_w + cell_w / 2 << "\" y=\""
        << 440 - 55 << "\" text-anchor=\"middle\">" << ranges[i] << " m</text>\n";
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << "<text x=\"82\" y=\"" << 30 + i * cell_h + cell_h / 2 + 4
        << "\" text-anchor=\"end\">d=" << ds[i] << "</text>\n";
  }
  out << "<text x=\"390\" y=\"" << 440 - 16
      << "\" text-anchor=\"middle\">range (m), RMS range error per cell (m)"
      << "</text>\n";
  out << "</svg>\n";

  std::ofstream f(path, std::ios::binary);
  f << out.str();
  if (!f) {
    throw DatasetError(DatasetFault::IoFailure, "cannot write " + path.string());
  }
}

}  // namespace uwcl
