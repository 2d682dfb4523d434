#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hrdyn {

// One recording: raw PPG plus one ground-truth HR label per segment.
// Labels are aligned to the segmentation config stored with the session.
struct PpgSession {
  std::string subject_id;
  double fs_hz = 0.0;
  std::vector<double> samples;
  std::vector<double> labels;  // bpm, one per segment
  double window_s = 8.0;
  double hop_s = 2.0;
  // Segments overlapping an injected motion-artifact burst (synthetic data
  // only; empty for real recordings).
  std::vector<int> artifact_segments;

  bool operator==(const PpgSession&) const = default;
};

struct Segment {
  std::vector<double> values;
  int index = 0;
  double t_start_s = 0.0;
};

struct SegmentationConfig {
  double window_s = 8.0;
  double hop_s = 2.0;
  double low_hz = 0.5;
  double high_hz = 4.0;
  int filter_order = 4;
};

// Second-order section in transposed direct form II, a0 normalized to 1.
struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 3> a{1.0, 0.0, 0.0};
};

// Digital Butterworth band-pass built from an analog prototype of the given
// order (the band-pass has 2*order poles), bilinear transform with
// pre-warped edges, unit gain at the geometric band centre.
std::vector<Biquad> design_butter_bandpass(int order, double fs_hz, double low_hz,
                                           double high_hz);

std::complex<double> frequency_response(std::span<const Biquad> sos, double f_hz,
                                        double fs_hz);

// Single forward pass with the given initial section states.
std::vector<double> sosfilt(std::span<const Biquad> sos, std::span<const double> x);

// Forward-backward filtering with odd-extension padding and steady-state
// initial conditions. Output length equals input length; the effective
// magnitude response is |H|^2 with zero phase.
std::vector<double> sosfiltfilt(std::span<const Biquad> sos, std::span<const double> x);

// Number of samples the odd extension needs; inputs must be longer.
std::size_t filtfilt_padlen(std::span<const Biquad> sos);

std::vector<double> bandpass(std::span<const double> samples, double fs_hz, double low_hz,
                             double high_hz, int order = 4);

// Standardize with the population standard deviation (divide by n).
// Throws DegenerateSegmentError when std <= 1e-12.
std::vector<double> zscore(std::span<const double> values);

// Number of windows for n samples; 0 when n < window_samples.
std::size_t segment_count(std::size_t n_samples, std::size_t window_samples,
                          std::size_t hop_samples);

// Converts a duration to an exact sample count or throws ConfigError.
std::size_t samples_for(double seconds, double fs_hz, const char* what);

// Band-pass the whole recording, slice into windows and z-score each one.
// Flat windows are dropped (logged), so returned indices may have gaps.
std::vector<Segment> segment(const PpgSession& session, const SegmentationConfig& cfg);

// Same, for a bare sample vector.
std::vector<Segment> segment_samples(std::span<const double> samples, double fs_hz,
                                     const SegmentationConfig& cfg);

// Linear-interpolation resampler between sampling rates.
std::vector<double> resample_linear(std::span<const double> samples, double fs_in,
                                    double fs_out);

// Checks fs, sample presence and the label/segment count relation.
void validate_session(const PpgSession& session);

}  // namespace hrdyn
