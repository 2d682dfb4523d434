#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace hrdyn {

enum class SeriesSource { ground_truth, predicted };

struct HrSeries {
  std::vector<double> values;  // bpm
  SeriesSource source = SeriesSource::ground_truth;
};

struct NoiseSpec {
  double sigma = 0.0;  // bpm
  std::uint64_t seed = 0;
};

// Row-major samples of a d-dimensional variable: sample i occupies
// data[i*dim .. i*dim+dim).
struct Samples {
  std::vector<double> data;
  std::size_t dim = 1;

  std::size_t size() const { return dim == 0 ? 0 : data.size() / dim; }
  static Samples scalar(std::span<const double> v) { return {{v.begin(), v.end()}, 1}; }
};

enum class GridMetric { mi, pcc_sum };
enum class MiEstimator { histogram, ksg };

struct MiGrid {
  std::vector<int> n_values;
  std::vector<double> sigma_values;
  std::vector<double> cells;  // n-major: cells[i * sigma_values.size() + j]
  GridMetric metric = GridMetric::mi;

  double at(std::size_t n_idx, std::size_t sigma_idx) const {
    return cells[n_idx * sigma_values.size() + sigma_idx];
  }
  bool operator==(const MiGrid&) const = default;
};

struct SweepOptions {
  MiEstimator estimator = MiEstimator::ksg;
  int bins = 16;      // histogram estimator
  int k = 3;          // KSG neighbours
  bool include_current = false;  // prepend y_t (+ noise) to the lag vector
};

struct TransferEntropyConfig {
  int lag = 1;         // L: length of the destination's own history
  int bins = 2;
  int source_lag = 1;  // source sample used is Y_{t - source_lag}
};

struct TransferEntropyResult {
  double nats = 0.0;
  bool sparse_bins = false;   // average occupancy of the joint cells < 5
  double mean_occupancy = 0.0;
};

// Equal-width bin index over [lo, hi]; hi maps to the last bin.
int bin_index(double v, double lo, double hi, int bins);

// Plug-in entropy (nats) of an equal-width histogram over [min, max].
double entropy_hist(std::span<const double> x, int bins = 16);

// Plug-in MI (nats) of the joint equal-width histogram. x may have up to 3
// dimensions, each binned independently.
double mi_hist(const Samples& x, std::span<const double> y, int bins = 16);

// Kraskov-Stoegbauer-Grassberger estimator (algorithm 1, max-norm).
// A deterministic jitter of 1e-10 x range per coordinate, drawn from seed,
// breaks ties between duplicate points.
double mi_ksg(const Samples& x, std::span<const double> y, int k = 3,
              std::uint64_t seed = 0);

// Lag vectors [y_{t-1} + s e_1, ..., y_{t-N} + s e_N] and targets y_t for
// t = N .. len-1. Noise for cell (n_idx, sigma_idx) comes from
// derive_seed(seed, "infodyn:sweep", n_idx * 1_000_003 + sigma_idx).
struct LagDesign {
  Samples history;
  std::vector<double> current;
};
LagDesign lag_design(std::span<const double> y, int n_lags, double sigma,
                     std::uint64_t noise_seed, bool include_current = false);

std::uint64_t sweep_cell_seed(std::uint64_t seed, std::size_t n_idx, std::size_t sigma_idx);

MiGrid mi_noise_sweep(const HrSeries& y, const std::vector<int>& n_values,
                      const std::vector<double>& sigma_values, std::uint64_t seed,
                      const SweepOptions& opts = {}, int jobs = 1);

double pearson(std::span<const double> a, std::span<const double> b);

MiGrid pcc_sweep(const HrSeries& y, const std::vector<int>& n_values,
                 const std::vector<double>& sigma_values, std::uint64_t seed,
                 bool include_current = false);

// Binned conditional MI I(X_t ; Y_{t-source_lag} | X_{t-1}, ..., X_{t-L}),
// where X is dst and Y is src.
TransferEntropyResult transfer_entropy(std::span<const double> src,
                                       std::span<const double> dst,
                                       const TransferEntropyConfig& cfg);

std::string to_string(GridMetric m);

// CSV with header `n,sigma,value,metric`, one row per cell.
void write_grid_csv(std::ostream& os, const MiGrid& grid);

// Reads a single-column CSV with header `hr_bpm`.
HrSeries read_series_csv(std::istream& is, const std::string& name = "<series>");

}  // namespace hrdyn
