#pragma once

#include "hrdyn/rng.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace testutil {

inline std::vector<double> sine(double f_hz, double fs_hz, std::size_t n, double amp = 1.0,
                                double phase = 0.0) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = amp * std::sin(2.0 * std::numbers::pi * f_hz * static_cast<double>(i) / fs_hz + phase);
  }
  return v;
}

inline std::vector<double> normals(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  hrdyn::Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = sd * hrdyn::standard_normal(rng);
  return v;
}

// x_t = mean + phi (x_{t-1} - mean) + sd * e_t
inline std::vector<double> ar1(std::size_t n, double phi, double sd, std::uint64_t seed,
                               double mean = 80.0) {
  hrdyn::Rng rng(seed);
  std::vector<double> v(n);
  double x = mean;
  for (double& out : v) {
    x = mean + phi * (x - mean) + sd * hrdyn::standard_normal(rng);
    out = x;
  }
  return v;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double pop_std(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace testutil
