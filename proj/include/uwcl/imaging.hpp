#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "uwcl/camera.hpp"

namespace uwcl {

class ImagingError : public std::runtime_error {
 public:
  explicit ImagingError(const std::string& what)
      : std::runtime_error("EmptyEndZone: " + what) {}
};

/// 8-bit RGB raster, row-major.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  ///< width * height * 3

  static RasterImage create(int w, int h) {
    RasterImage img;
    img.width = w;
    img.height = h;
    img.pixels.assign(static_cast<std::size_t>(w) * h * 3, 0);
    return img;
  }

  bool valid() const {
    return width > 0 && height > 0 &&
           pixels.size() == static_cast<std::size_t>(width) * height * 3;
  }

  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }
  std::uint8_t* at(int x, int y) {
    return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }

  /// Brightness in [0,1]: the HSV value channel.
  double brightness(int x, int y) const {
    const std::uint8_t* p = at(x, y);
    return std::max({p[0], p[1], p[2]}) / 255.0;
  }
};

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  ///< 0 or 1, row-major

  static BinaryMask create(int w, int h) {
    BinaryMask m;
    m.width = w;
    m.height = h;
    m.bits.assign(static_cast<std::size_t>(w) * h, 0);
    return m;
  }

  bool get(int x, int y) const {
    return bits[static_cast<std::size_t>(y) * width + x] != 0;
  }
  void set(int x, int y, bool v) {
    bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
  }
  int count() const {
    int n = 0;
    for (std::uint8_t b : bits) n += b;
    return n;
  }
};

struct Hsv {
  double h = 0;  ///< degrees, [0, 360)
  double s = 0;  ///< [0, 1]
  double v = 0;  ///< [0, 1]
};

Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// HSV acceptance window. The hue interval may wrap around 360.
struct HsvThreshold {
  double hue_min = 0;
  double hue_max = 360;
  double sat_min = 0;
  double sat_max = 1;
  double val_min = 0;
  double val_max = 1;

  bool contains(const Hsv& c) const;
};

BinaryMask hsv_threshold(const RasterImage& img, const HsvThreshold& t);

/// Dilation followed by erosion with a disc structuring element. The
/// output is always a superset of the input.
BinaryMask morph_close(const BinaryMask& mask, int kernel_radius);

/// One connected bright region.
struct Blob {
  std::vector<int> pixel_indices;  ///< row-major indices into the mask grid
  int min_x = 0, min_y = 0, max_x = 0, max_y = 0;  ///< inclusive bounds
  int area = 0;
  double mean_brightness = 0;  ///< [0,1], from the source image
};

/// 8-connected components of the mask with at least min_area pixels,
/// in scan-line order.
std::vector<Blob> extract_regions(const BinaryMask& mask,
                                  const RasterImage& source, int min_area);

struct MarkerCandidate {
  PixelPointd position;        ///< sub-pixel
  double brightness_score = 0; ///< [0,1]
  int source_blob = -1;
};

struct RefineConfig {
  double end_fraction = 0.25;          ///< share of the major axis per end zone
  double brightness_percentile = 90.0; ///< over the blob's pixels
  double symmetric_tolerance = 0.05;   ///< normalized intensity
};

/// Sub-pixel marker location for one blob.
///
/// The blob's bounding region is split into two end zones along its
/// principal axis. When one end is clearly brighter (light beams smear away
/// from the source), the intensity-weighted centroid of that end's
/// brightest pixels is returned; otherwise the whole-blob intensity-
/// weighted centroid. Throws ImagingError when the chosen end zone holds no
/// pixel above the brightness percentile.
MarkerCandidate refine_marker(const Blob& blob, const RasterImage& img,
                              const RefineConfig& cfg = {});

/// Whole-blob intensity-weighted centroid; the undistorted baseline the
/// end-zone method is measured against.
PixelPointd blob_centroid(const Blob& blob, const RasterImage& img);

struct CandidatePair {
  int left = 0;   ///< candidate index, smaller u after roll compensation
  int right = 0;
  double separation_px = 0;
};

/// All unordered candidate pairs, each oriented by roll-compensated u.
std::vector<CandidatePair> enumerate_pairs(
    const std::vector<MarkerCandidate>& candidates, double roll);

struct DetectionConfig {
  HsvThreshold threshold;
  int close_radius = 2;
  int min_area = 9;
  RefineConfig refine;
};

struct FrameDetections {
  std::vector<MarkerCandidate> candidates;
  std::vector<CandidatePair> pairs;
};

/// threshold -> close -> extract -> refine -> pair. Blobs whose end zones
/// cannot be refined are dropped.
FrameDetections detect_markers(const RasterImage& img,
                               const DetectionConfig& cfg, double roll);

}  // namespace uwcl
