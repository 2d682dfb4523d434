#include "hrdyn/spectral.hpp"

#include "hrdyn/error.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace hrdyn {

double estimate_hr_fft(std::span<const double> segment, const SpectralConfig& cfg) {
  const std::size_t n = segment.size();
  if (n < 2) throw InputError("segment too short for spectral estimate");
  if (cfg.fft_len < n) throw ConfigError("fft_len must be >= segment length");
  if (!(cfg.low_hz > 0.0 && cfg.low_hz < cfg.high_hz && cfg.high_hz < cfg.fs_hz / 2.0)) {
    throw ConfigError("spectral band must satisfy 0 < low < high < fs/2");
  }
  bool all_zero = true;
  for (double v : segment) {
    if (!std::isfinite(v)) throw InputError("non-finite sample in segment");
    if (v != 0.0) all_zero = false;
  }
  if (all_zero) throw DegenerateSegmentError("all-zero segment has no spectral peak");

  std::vector<double> windowed(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                          static_cast<double>(n - 1));
    windowed[i] = segment[i] * w;
  }

  const double bin_hz = cfg.fs_hz / static_cast<double>(cfg.fft_len);
  const auto first = static_cast<std::size_t>(std::ceil(cfg.low_hz / bin_hz - 1e-9));
  const auto last = static_cast<std::size_t>(std::floor(cfg.high_hz / bin_hz + 1e-9));

  double best_power = -1.0;
  std::size_t best_bin = first;
  for (std::size_t k = first; k <= last; ++k) {
    // Rotating phasor; recomputed exactly every 64 samples to bound drift.
    const double omega = 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(cfg.fft_len);
    const double cstep = std::cos(omega);
    const double sstep = std::sin(omega);
    double re = 0.0;
    double im = 0.0;
    double c = 1.0;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i % 64 == 0) {
        c = std::cos(omega * static_cast<double>(i));
        s = std::sin(omega * static_cast<double>(i));
      }
      re += windowed[i] * c;
      im -= windowed[i] * s;
      const double nc = c * cstep - s * sstep;
      s = s * cstep + c * sstep;
      c = nc;
    }
    const double power = re * re + im * im;
    if (power > best_power) {
      best_power = power;
      best_bin = k;
    }
  }
  return 60.0 * static_cast<double>(best_bin) * bin_hz;
}

}  // namespace hrdyn
