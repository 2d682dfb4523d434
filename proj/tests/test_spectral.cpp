#include "helpers.hpp"
#include "hrdyn/error.hpp"
#include "hrdyn/signal.hpp"
#include "hrdyn/spectral.hpp"

#include <doctest.h>

#include <cmath>

using namespace hrdyn;
using testutil::sine;

namespace {

SpectralConfig cfg64() {
  SpectralConfig c;
  c.fs_hz = 64.0;
  return c;
}

}  // namespace

TEST_CASE("pure sinusoid at 1.25 Hz reads 75 bpm") {
  const auto x = zscore(sine(1.25, 64.0, 512));
  CHECK(std::abs(estimate_hr_fft(x, cfg64()) - 75.0) <= 0.5);
}

TEST_CASE("stronger component wins") {
  auto a = sine(1.0, 64.0, 512, 2.0);
  const auto b = sine(2.0, 64.0, 512, 1.0);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  CHECK(std::abs(estimate_hr_fft(zscore(a), cfg64()) - 60.0) <= 0.5);
}

TEST_CASE("white noise stays inside the search band") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const double hr = estimate_hr_fft(zscore(testutil::normals(512, seed)), cfg64());
    CHECK(hr >= 30.0);
    CHECK(hr <= 240.0);
  }
}

TEST_CASE("amplitude invariance") {
  const auto x = testutil::normals(512, 4);
  const double ref = estimate_hr_fft(x, cfg64());
  for (double c : {1e-3, 0.5, 7.0, 1e4}) {
    std::vector<double> y(x);
    for (double& v : y) v *= c;
    CHECK(estimate_hr_fft(y, cfg64()) == ref);
  }
}

TEST_CASE("resolution bound on and off the bin grid") {
  const SpectralConfig c = cfg64();
  const double bin_hz = c.fs_hz / static_cast<double>(c.fft_len);
  const double leakage_hz = 0.005;
  hrdyn::Rng rng(8);
  for (int trial = 0; trial < 60; ++trial) {
    double f0 = 0.7 + 3.1 * uniform01(rng);
    if (trial % 2 == 0) f0 = std::round(f0 / bin_hz) * bin_hz;  // exactly on a bin
    const auto x = sine(f0, c.fs_hz, 512, 1.0, 6.28 * uniform01(rng));
    const double est = estimate_hr_fft(x, c);
    CHECK(std::abs(est - 60.0 * f0) <= 60.0 * bin_hz / 2.0 + 60.0 * leakage_hz);
  }
}

TEST_CASE("all-zero segment is degenerate") {
  const std::vector<double> z(512, 0.0);
  CHECK_THROWS_AS(estimate_hr_fft(z, cfg64()), DegenerateSegmentError);
}

TEST_CASE("invalid configuration") {
  SpectralConfig c = cfg64();
  c.high_hz = 40.0;
  CHECK_THROWS_AS(estimate_hr_fft(testutil::normals(512, 1), c), ConfigError);
  c = cfg64();
  c.fft_len = 256;
  CHECK_THROWS_AS(estimate_hr_fft(testutil::normals(512, 1), c), ConfigError);
}
