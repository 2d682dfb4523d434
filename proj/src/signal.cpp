#include "hrdyn/signal.hpp"

#include "hrdyn/error.hpp"
#include "hrdyn/log.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace hrdyn {

namespace {

using cplx = std::complex<double>;

std::complex<double> section_response(const Biquad& s, cplx z_inv) {
  const cplx num = s.b[0] + z_inv * (s.b[1] + z_inv * s.b[2]);
  const cplx den = s.a[0] + z_inv * (s.a[1] + z_inv * s.a[2]);
  return num / den;
}

// Steady-state TDF-II state for a unit step input.
std::array<double, 2> section_step_state(const Biquad& s) {
  const double gain =
      (s.b[0] + s.b[1] + s.b[2]) / (s.a[0] + s.a[1] + s.a[2]);
  const double z1 = s.b[2] - s.a[2] * gain;
  const double z0 = s.b[1] - s.a[1] * gain + z1;
  return {z0, z1};
}

double section_dc_gain(const Biquad& s) {
  return (s.b[0] + s.b[1] + s.b[2]) / (s.a[0] + s.a[1] + s.a[2]);
}

std::vector<double> run_sos(std::span<const Biquad> sos, std::span<const double> x,
                            double initial_level) {
  std::vector<double> y(x.begin(), x.end());
  double level = initial_level;
  for (const Biquad& s : sos) {
    auto st = section_step_state(s);
    double z0 = st[0] * level;
    double z1 = st[1] * level;
    for (double& v : y) {
      const double in = v;
      const double out = s.b[0] * in + z0;
      z0 = s.b[1] * in - s.a[1] * out + z1;
      z1 = s.b[2] * in - s.a[2] * out;
      v = out;
    }
    level *= section_dc_gain(s);
  }
  return y;
}

}  // namespace

std::vector<Biquad> design_butter_bandpass(int order, double fs_hz, double low_hz,
                                           double high_hz) {
  if (order < 1) throw ConfigError("filter order must be >= 1");
  if (!(fs_hz > 0.0)) throw ConfigError("sampling rate must be positive");
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < fs_hz / 2.0)) {
    std::ostringstream os;
    os << "invalid band [" << low_hz << ", " << high_hz << "] Hz for fs " << fs_hz
       << " Hz (need 0 < low < high < fs/2)";
    throw ConfigError(os.str());
  }
  const double fs2 = 2.0 * fs_hz;
  const double wl = fs2 * std::tan(std::numbers::pi * low_hz / fs_hz);
  const double wh = fs2 * std::tan(std::numbers::pi * high_hz / fs_hz);
  const double bw = wh - wl;
  const double w0sq = wl * wh;

  // Prototype poles in the upper half plane; their conjugates give the
  // conjugate band-pass poles, so each one yields two biquads. Odd orders
  // contribute the real pole -1, which maps to a conjugate pair (or two real
  // poles) handled below.
  std::vector<cplx> analog;  // band-pass poles with Im >= 0 (one per conj pair)
  std::vector<std::pair<double, double>> real_pairs;
  for (int k = 0; k < order; ++k) {
    const cplx p = std::polar(1.0, std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order));
    if (p.imag() < -1e-12) continue;
    const cplx half = p * bw / 2.0;
    const cplx disc = std::sqrt(half * half - w0sq);
    const cplx q1 = half + disc;
    const cplx q2 = half - disc;
    if (std::abs(p.imag()) <= 1e-12) {
      if (std::abs(q1.imag()) > 1e-9) {
        analog.push_back(q1.imag() > 0 ? q1 : q2);
      } else {
        real_pairs.emplace_back(q1.real(), q2.real());
      }
    } else {
      analog.push_back(q1);
      analog.push_back(q2);
    }
  }

  auto to_z = [fs2](cplx s) { return (fs2 + s) / (fs2 - s); };
  std::vector<Biquad> sos;
  for (const cplx& s : analog) {
    const cplx z = to_z(s);
    Biquad bq;
    bq.b = {1.0, 0.0, -1.0};
    bq.a = {1.0, -2.0 * z.real(), std::norm(z)};
    sos.push_back(bq);
  }
  for (const auto& [r1, r2] : real_pairs) {
    const double z1 = to_z(r1).real();
    const double z2 = to_z(r2).real();
    Biquad bq;
    bq.b = {1.0, 0.0, -1.0};
    bq.a = {1.0, -(z1 + z2), z1 * z2};
    sos.push_back(bq);
  }

  // Normalize every section to unit gain at the centre frequency.
  const double wc = 2.0 * std::atan(std::sqrt(w0sq) / fs2);
  const cplx zc_inv = std::polar(1.0, -wc);
  for (Biquad& s : sos) {
    const double g = std::abs(section_response(s, zc_inv));
    for (double& c : s.b) c /= g;
  }
  return sos;
}

std::complex<double> frequency_response(std::span<const Biquad> sos, double f_hz,
                                        double fs_hz) {
  const cplx z_inv = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / fs_hz);
  cplx h = 1.0;
  for (const Biquad& s : sos) h *= section_response(s, z_inv);
  return h;
}

std::vector<double> sosfilt(std::span<const Biquad> sos, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  for (const Biquad& s : sos) {
    double z0 = 0.0;
    double z1 = 0.0;
    for (double& v : y) {
      const double in = v;
      const double out = s.b[0] * in + z0;
      z0 = s.b[1] * in - s.a[1] * out + z1;
      z1 = s.b[2] * in - s.a[2] * out;
      v = out;
    }
  }
  return y;
}

std::size_t filtfilt_padlen(std::span<const Biquad> sos) {
  return 3 * (2 * sos.size() + 1);
}

std::vector<double> sosfiltfilt(std::span<const Biquad> sos, std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t pad = filtfilt_padlen(sos);
  if (n <= pad) {
    std::ostringstream os;
    os << "input of " << n << " samples is too short for forward-backward filtering "
       << "(need more than " << pad << ")";
    throw InputError(os.str());
  }
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  std::vector<double> fwd = run_sos(sos, ext, ext.front());
  std::reverse(fwd.begin(), fwd.end());
  std::vector<double> bwd = run_sos(sos, fwd, fwd.front());
  std::reverse(bwd.begin(), bwd.end());
  return {bwd.begin() + static_cast<std::ptrdiff_t>(pad),
          bwd.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

std::vector<double> bandpass(std::span<const double> samples, double fs_hz, double low_hz,
                             double high_hz, int order) {
  const auto sos = design_butter_bandpass(order, fs_hz, low_hz, high_hz);
  return sosfiltfilt(sos, samples);
}

std::vector<double> zscore(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) throw InputError("zscore needs at least 2 values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double sd = std::sqrt(var);
  if (!(sd > 1e-12)) throw DegenerateSegmentError("zero-variance segment");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (values[i] - mean) / sd;
  return out;
}

std::size_t segment_count(std::size_t n_samples, std::size_t window_samples,
                          std::size_t hop_samples) {
  if (window_samples == 0 || hop_samples == 0) return 0;
  if (n_samples < window_samples) return 0;
  return (n_samples - window_samples) / hop_samples + 1;
}

std::size_t samples_for(double seconds, double fs_hz, const char* what) {
  if (!(seconds > 0.0)) throw ConfigError(std::string(what) + " must be positive");
  const double exact = seconds * fs_hz;
  const double rounded = std::round(exact);
  if (std::abs(exact - rounded) > 1e-9 * std::max(1.0, exact) || rounded < 1.0) {
    std::ostringstream os;
    os << what << " of " << seconds << " s at " << fs_hz
       << " Hz is not an integer number of samples";
    throw ConfigError(os.str());
  }
  return static_cast<std::size_t>(rounded);
}

std::vector<Segment> segment_samples(std::span<const double> samples, double fs_hz,
                                     const SegmentationConfig& cfg) {
  if (!(fs_hz > 0.0)) throw ConfigError("sampling rate must be positive");
  const std::size_t win = samples_for(cfg.window_s, fs_hz, "window");
  const std::size_t hop = samples_for(cfg.hop_s, fs_hz, "hop");
  const std::size_t count = segment_count(samples.size(), win, hop);
  if (count == 0) return {};

  const std::vector<double> filtered =
      bandpass(samples, fs_hz, cfg.low_hz, cfg.high_hz, cfg.filter_order);
  std::vector<Segment> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::span<const double> window(filtered.data() + i * hop, win);
    try {
      out.push_back({zscore(window), static_cast<int>(i),
                     static_cast<double>(i * hop) / fs_hz});
    } catch (const DegenerateSegmentError&) {
      log::warn("dropping flat segment " + std::to_string(i));
    }
  }
  return out;
}

std::vector<Segment> segment(const PpgSession& session, const SegmentationConfig& cfg) {
  return segment_samples(session.samples, session.fs_hz, cfg);
}

std::vector<double> resample_linear(std::span<const double> samples, double fs_in,
                                    double fs_out) {
  if (!(fs_in > 0.0) || !(fs_out > 0.0)) throw ConfigError("sampling rates must be positive");
  if (samples.empty()) return {};
  const double duration = static_cast<double>(samples.size() - 1) / fs_in;
  const auto n_out = static_cast<std::size_t>(std::floor(duration * fs_out + 1e-9)) + 1;
  std::vector<double> out(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = static_cast<double>(i) * fs_in / fs_out;
    const auto lo = std::min(static_cast<std::size_t>(pos), samples.size() - 1);
    const std::size_t hi = std::min(lo + 1, samples.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    out[i] = samples[lo] + frac * (samples[hi] - samples[lo]);
  }
  return out;
}

void validate_session(const PpgSession& session) {
  if (!(session.fs_hz > 0.0)) throw ConfigError("fs_hz must be positive");
  if (session.samples.empty()) throw InputError("session has no samples");
  const std::size_t win = samples_for(session.window_s, session.fs_hz, "window");
  const std::size_t hop = samples_for(session.hop_s, session.fs_hz, "hop");
  const std::size_t expected = segment_count(session.samples.size(), win, hop);
  if (!session.labels.empty() && session.labels.size() != expected) {
    std::ostringstream os;
    os << "session " << session.subject_id << " has " << session.labels.size()
       << " labels but its segmentation yields " << expected << " segments";
    throw InputError(os.str());
  }
}

}  // namespace hrdyn
