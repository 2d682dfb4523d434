#pragma once

#include <cstddef>
#include <span>

namespace hrdyn {

struct SpectralConfig {
  std::size_t fft_len = 8192;  // zero-padded transform length
  double low_hz = 0.5;
  double high_hz = 4.0;
  double fs_hz = 64.0;
};

// Heart rate (bpm) of the strongest spectral peak inside [low_hz, high_hz].
//
// The segment is Hann-windowed, zero-padded to fft_len and its magnitude is
// evaluated on the bins of the padded transform that fall inside the band.
// Only those bins are computed, as a direct DFT. Equal magnitudes resolve to
// the lower frequency.
double estimate_hr_fft(std::span<const double> segment, const SpectralConfig& cfg);

}  // namespace hrdyn
