#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace uwcl {

/// Deterministic random stream with explicitly coded samplers.
///
/// Standard-library distributions are implementation-defined; datasets must
/// be byte-identical for a given seed, so the samplers here are spelled out.
/// Per-frame substreams (mix of seed and frame index) keep parallel and
/// sequential generation identical.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// splitmix64 mix of a seed and a stream index.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static Rng substream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(mix(seed, stream));
  }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Marsaglia polar method; one spare kept between calls.
  double normal(double mean = 0.0, double sigma = 1.0) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + sigma * spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return mean + sigma * u * m;
  }

  /// Knuth's product method; fine for the small rates used here.
  int poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    const double limit = std::exp(-lambda);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace uwcl
