#include "uwcl/imaging.hpp"

#include <algorithm>
#include <cmath>

namespace uwcl {

Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const double rf = r / 255.0, gf = g / 255.0, bf = b / 255.0;
  const double mx = std::max({rf, gf, bf});
  const double mn = std::min({rf, gf, bf});
  const double delta = mx - mn;
  Hsv out;
  out.v = mx;
  out.s = mx > 0 ? delta / mx : 0.0;
  if (delta <= 0) {
    out.h = 0;
  } else if (mx == rf) {
    out.h = 60.0 * std::fmod((gf - bf) / delta, 6.0);
  } else if (mx == gf) {
    out.h = 60.0 * ((bf - rf) / delta + 2.0);
  } else {
    out.h = 60.0 * ((rf - gf) / delta + 4.0);
  }
  if (out.h < 0) out.h += 360.0;
  return out;
}

bool HsvThreshold::contains(const Hsv& c) const {
  if (c.s < sat_min || c.s > sat_max) return false;
  if (c.v < val_min || c.v > val_max) return false;
  if (hue_min <= hue_max) return c.h >= hue_min && c.h <= hue_max;
  return c.h >= hue_min || c.h <= hue_max;  // wrapped interval
}

BinaryMask hsv_threshold(const RasterImage& img, const HsvThreshold& t) {
  BinaryMask mask = BinaryMask::create(img.width, img.height);
  const std::uint8_t* p = img.pixels.data();
  for (std::size_t i = 0; i < mask.bits.size(); ++i, p += 3) {
    mask.bits[i] = t.contains(rgb_to_hsv(p[0], p[1], p[2])) ? 1 : 0;
  }
  return mask;
}

namespace {

std::vector<std::pair<int, int>> disc_offsets(int radius) {
  std::vector<std::pair<int, int>> off;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) off.emplace_back(dx, dy);
    }
  }
  return off;
}

}  // namespace

BinaryMask morph_close(const BinaryMask& mask, int kernel_radius) {
  const auto off = disc_offsets(kernel_radius);
  BinaryMask dilated = BinaryMask::create(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.get(x, y)) continue;
      for (const auto& [dx, dy] : off) {
        const int nx = x + dx, ny = y + dy;
        if (nx >= 0 && ny >= 0 && nx < mask.width && ny < mask.height) {
          dilated.set(nx, ny, true);
        }
      }
    }
  }
  // erosion treats out-of-bounds as set so closing stays extensive at the
  // image border
  BinaryMask out = BinaryMask::create(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      bool all = true;
      for (const auto& [dx, dy] : off) {
        const int nx = x + dx, ny = y + dy;
        if (nx >= 0 && ny >= 0 && nx < mask.width && ny < mask.height &&
            !dilated.get(nx, ny)) {
          all = false;
          break;
        }
      }
      out.set(x, y, all);
    }
  }
  return out;
}

std::vector<Blob> extract_regions(const BinaryMask& mask,
                                  const RasterImage& source, int min_area) {
  std::vector<Blob> blobs;
  std::vector<std::uint8_t> seen(mask.bits.size(), 0);
  std::vector<int> stack;
  for (int y0 = 0; y0 < mask.height; ++y0) {
    for (int x0 = 0; x0 < mask.width; ++x0) {
      const int idx0 = y0 * mask.width + x0;
      if (!mask.bits[idx0] || seen[idx0]) continue;
      Blob b;
      b.min_x = b.max_x = x0;
      b.min_y = b.max_y = y0;
      double sum_v = 0;
      stack.assign(1, idx0);
      seen[idx0] = 1;
      while (!stack.empty()) {
        const int idx = stack.back();
        stack.pop_back();
        const int x = idx % mask.width;
        const int y = idx / mask.width;
        b.pixel_indices.push_back(idx);
        b.min_x = std::min(b.min_x, x);
        b.max_x = std::max(b.max_x, x);
        b.min_y = std::min(b.min_y, y);
        b.max_y = std::max(b.max_y, y);
        sum_v += source.brightness(x, y);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= mask.width || ny >= mask.height) {
              continue;
            }
            const int nidx = ny * mask.width + nx;
            if (mask.bits[nidx] && !seen[nidx]) {
              seen[nidx] = 1;
              stack.push_back(nidx);
            }
          }
        }
      }
      b.area = static_cast<int>(b.pixel_indices.size());
      if (b.area < min_area) continue;
      b.mean_brightness = sum_v / b.area;
      std::sort(b.pixel_indices.begin(), b.pixel_indices.end());
      blobs.push_back(std::move(b));
    }
  }
  return blobs;
}

PixelPointd blob_centroid(const Blob& blob, const RasterImage& img) {
  double su = 0, sv = 0, sw = 0;
  for (int idx : blob.pixel_indices) {
    const int x = idx % img.width;
    const int y = idx / img.width;
    const double w = img.brightness(x, y);
    su += w * x;
    sv += w * y;
    sw += w;
  }
  if (sw <= 0) {  // all-black membership: plain centroid
    for (int idx : blob.pixel_indices) {
      su += idx % img.width;
      sv += idx / img.width;
    }
    sw = static_cast<double>(blob.pixel_indices.size());
  }
  return {su / sw, sv / sw};
}

MarkerCandidate refine_marker(const Blob& blob, const RasterImage& img,
                              const RefineConfig& cfg) {
  struct Px {
    double x, y, w, t;
  };
  std::vector<Px> px;
  px.reserve(blob.pixel_indices.size());
  double mx = 0, my = 0;
  for (int idx : blob.pixel_indices) {
    const int x = idx % img.width;
    const int y = idx / img.width;
    px.push_back({double(x), double(y), img.brightness(x, y), 0});
    mx += x;
    my += y;
  }
  mx /= px.size();
  my /= px.size();

  // principal axis of the pixel-coordinate covariance
  double cxx = 0, cxy = 0, cyy = 0;
  for (const auto& p : px) {
    cxx += (p.x - mx) * (p.x - mx);
    cxy += (p.x - mx) * (p.y - my);
    cyy += (p.y - my) * (p.y - my);
  }
  const double theta = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);
  const double ax = std::cos(theta), ay = std::sin(theta);

  double tmin = 0, tmax = 0;
  for (auto& p : px) {
    p.t = (p.x - mx) * ax + (p.y - my) * ay;
    tmin = std::min(tmin, p.t);
    tmax = std::max(tmax, p.t);
  }
  const double span = tmax - tmin;
  const double lo_cut = tmin + cfg.end_fraction * span;
  const double hi_cut = tmax - cfg.end_fraction * span;

  double mean_lo = 0, mean_hi = 0;
  int n_lo = 0, n_hi = 0;
  for (const auto& p : px) {
    if (p.t <= lo_cut) {
      mean_lo += p.w;
      ++n_lo;
    }
    if (p.t >= hi_cut) {
      mean_hi += p.w;
      ++n_hi;
    }
  }
  mean_lo /= std::max(n_lo, 1);
  mean_hi /= std::max(n_hi, 1);

  MarkerCandidate cand;
  cand.source_blob = -1;

  if (std::abs(mean_hi - mean_lo) < cfg.symmetric_tolerance) {
    // undistorted marker: both ends look alike, use the whole blob
    cand.position = blob_centroid(blob, img);
    cand.brightness_score = blob.mean_brightness;
    return cand;
  }

  // brightness cut at the requested percentile of the blob's pixels
  std::vector<double> ws(px.size());
  for (std::size_t i = 0; i < px.size(); ++i) ws[i] = px[i].w;
  const std::size_t nth = std::min(
      px.size() - 1,
      static_cast<std::size_t>(cfg.brightness_percentile / 100.0 * px.size()));
  std::nth_element(ws.begin(), ws.begin() + nth, ws.end());
  const double cut = ws[nth];

  const bool hi_brighter = mean_hi > mean_lo;
  double su = 0, sv = 0, sw = 0, sb = 0;
  int nb = 0;
  for (const auto& p : px) {
    const bool in_zone = hi_brighter ? (p.t >= hi_cut) : (p.t <= lo_cut);
    if (!in_zone || p.w < cut) continue;
    su += p.w * p.x;
    sv += p.w * p.y;
    sw += p.w;
    sb += p.w;
    ++nb;
  }
  if (nb == 0 || sw <= 0) {
    throw ImagingError("no pixel above the brightness percentile in the end zone");
  }
  cand.position = {su / sw, sv / sw};
  cand.brightness_score = sb / nb;
  return cand;
}

std::vector<CandidatePair> enumerate_pairs(
    const std::vector<MarkerCandidate>& candidates, double roll) {
  std::vector<CandidatePair> pairs;
  const int n = static_cast<int>(candidates.size());
  pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  const double cr = std::cos(roll), sr = std::sin(roll);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double ui = candidates[i].position.u * cr + candidates[i].position.v * sr;
      const double uj = candidates[j].position.u * cr + candidates[j].position.v * sr;
      CandidatePair p;
      p.left = ui <= uj ? i : j;
      p.right = ui <= uj ? j : i;
      p.separation_px = std::hypot(
          candidates[i].position.u - candidates[j].position.u,
          candidates[i].position.v - candidates[j].position.v);
      pairs.push_back(p);
    }
  }
  return pairs;
}

FrameDetections detect_markers(const RasterImage& img,
                               const DetectionConfig& cfg, double roll) {
  FrameDetections out;
  const BinaryMask mask = morph_close(hsv_threshold(img, cfg.threshold),
                                      cfg.close_radius);
  const std::vector<Blob> blobs = extract_regions(mask, img, cfg.min_area);
  out.candidates.reserve(blobs.size());
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    try {
      MarkerCandidate c = refine_marker(blobs[i], img, cfg.refine);
      c.source_blob = static_cast<int>(i);
      out.candidates.push_back(c);
    } catch (const ImagingError&) {
      // unrefinable blob: dropped
    }
  }
  out.pairs = enumerate_pairs(out.candidates, roll);
  return out;
}

}  // namespace uwcl
