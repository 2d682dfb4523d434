#include "hrdyn/infodyn.hpp"

#include "hrdyn/error.hpp"
#include "hrdyn/log.hpp"
#include "hrdyn/parallel.hpp"
#include "hrdyn/rng.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>
#include <unordered_map>

namespace hrdyn {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw InputError(std::string(what) + " contains non-finite values");
  }
}

std::pair<double, double> min_max(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return {*lo, *hi};
}

std::vector<int> bin_all(std::span<const double> v, int bins) {
  const auto [lo, hi] = min_max(v);
  std::vector<int> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = bin_index(v[i], lo, hi, bins);
  return out;
}

double digamma(double x) { return boost::math::digamma(x); }

}  // namespace

int bin_index(double v, double lo, double hi, int bins) {
  if (!(hi > lo)) return 0;
  const double pos = (v - lo) / (hi - lo) * static_cast<double>(bins);
  const int b = static_cast<int>(std::floor(pos));
  return std::clamp(b, 0, bins - 1);
}

double entropy_hist(std::span<const double> x, int bins) {
  if (bins < 2) throw ConfigError("entropy_hist needs at least 2 bins");
  if (x.size() < static_cast<std::size_t>(bins)) {
    throw InputError("entropy_hist needs at least as many samples as bins");
  }
  require_finite(x, "series");
  const std::vector<int> idx = bin_all(x, bins);
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  for (int b : idx) ++counts[static_cast<std::size_t>(b)];
  double h = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

double mi_hist(const Samples& x, std::span<const double> y, int bins) {
  if (bins < 2) throw ConfigError("mi_hist needs at least 2 bins");
  if (x.dim == 0) throw InputError("x must have at least one dimension");
  if (x.dim > 3) {
    throw EstimatorChoiceError("histogram MI supports at most 3 dimensions for x (got " +
                               std::to_string(x.dim) + "); use mi_ksg");
  }
  const std::size_t n = x.size();
  if (n != y.size()) throw InputError("mi_hist: x and y lengths differ");
  if (n < 2) throw InputError("mi_hist needs at least 2 samples");
  require_finite(x.data, "x");
  require_finite(y, "y");

  // Per-dimension binning, then a mixed-radix code for the joint x cell.
  std::vector<std::uint64_t> xcode(n, 0);
  for (std::size_t d = 0; d < x.dim; ++d) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = x.data[i * x.dim + d];
    const std::vector<int> b = bin_all(col, bins);
    for (std::size_t i = 0; i < n; ++i) {
      xcode[i] = xcode[i] * static_cast<std::uint64_t>(bins) + static_cast<std::uint64_t>(b[i]);
    }
  }
  const std::vector<int> ybin = bin_all(y, bins);

  std::unordered_map<std::uint64_t, std::size_t> cx, cy, cxy;
  for (std::size_t i = 0; i < n; ++i) {
    const auto yb = static_cast<std::uint64_t>(ybin[i]);
    ++cx[xcode[i]];
    ++cy[yb];
    ++cxy[xcode[i] * static_cast<std::uint64_t>(bins) + yb];
  }
  const double nn = static_cast<double>(n);
  std::vector<double> terms;
  terms.reserve(cxy.size());
  for (const auto& [key, c] : cxy) {
    const std::uint64_t xc = key / static_cast<std::uint64_t>(bins);
    const std::uint64_t yc = key % static_cast<std::uint64_t>(bins);
    const double pxy = static_cast<double>(c) / nn;
    terms.push_back(pxy * std::log(static_cast<double>(c) * nn /
                                   (static_cast<double>(cx[xc]) * static_cast<double>(cy[yc]))));
  }
  // Sorted summation makes the result independent of hash-map order.
  std::sort(terms.begin(), terms.end());
  const double mi = std::accumulate(terms.begin(), terms.end(), 0.0);
  return std::max(mi, 0.0);
}

double mi_ksg(const Samples& x_in, std::span<const double> y_in, int k, std::uint64_t seed) {
  if (k < 1) throw ConfigError("KSG k must be >= 1");
  const std::size_t n = x_in.size();
  const std::size_t dx = x_in.dim;
  if (dx == 0) throw InputError("x must have at least one dimension");
  if (n != y_in.size()) throw InputError("mi_ksg: x and y lengths differ");
  if (n <= static_cast<std::size_t>(k) + 1) throw InputError("mi_ksg needs more than k+1 samples");
  require_finite(x_in.data, "x");
  require_finite(y_in, "y");

  // Jitter: 1e-10 x range per coordinate, deterministic in seed.
  Rng rng(derive_seed(seed, "infodyn:ksg-jitter"));
  std::vector<double> x(x_in.data);
  std::vector<double> y(y_in.begin(), y_in.end());
  for (std::size_t d = 0; d < dx; ++d) {
    double lo = x[d], hi = x[d];
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, x[i * dx + d]);
      hi = std::max(hi, x[i * dx + d]);
    }
    const double amp = 1e-10 * std::max(hi - lo, 1.0);
    for (std::size_t i = 0; i < n; ++i) x[i * dx + d] += amp * (uniform01(rng) - 0.5);
  }
  {
    const auto [lo, hi] = min_max(y);
    const double amp = 1e-10 * std::max(hi - lo, 1.0);
    for (double& v : y) v += amp * (uniform01(rng) - 0.5);
  }

  auto xdist = [&](std::size_t i, std::size_t j) {
    double m = 0.0;
    for (std::size_t d = 0; d < dx; ++d) {
      m = std::max(m, std::abs(x[i * dx + d] - x[j * dx + d]));
    }
    return m;
  };

  std::vector<std::size_t> by_y(n);
  std::iota(by_y.begin(), by_y.end(), 0);
  std::sort(by_y.begin(), by_y.end(), [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
  std::vector<std::size_t> pos_y(n);
  for (std::size_t r = 0; r < n; ++r) pos_y[by_y[r]] = r;
  std::vector<double> y_sorted(n);
  for (std::size_t r = 0; r < n; ++r) y_sorted[r] = y[by_y[r]];

  std::vector<std::size_t> by_x0(n);
  std::iota(by_x0.begin(), by_x0.end(), 0);
  std::sort(by_x0.begin(), by_x0.end(),
            [&](std::size_t a, std::size_t b) { return x[a * dx] < x[b * dx]; });
  std::vector<double> x0_sorted(n);
  for (std::size_t r = 0; r < n; ++r) x0_sorted[r] = x[by_x0[r] * dx];

  const auto kk = static_cast<std::size_t>(k);
  double acc = 0.0;
  std::priority_queue<double> heap;
  for (std::size_t i = 0; i < n; ++i) {
    heap = {};
    const std::size_t p = pos_y[i];
    // Walk outward in y-order; a neighbour further than the current k-th
    // distance in y cannot be closer in max-norm.
    std::size_t lo = p, hi = p;
    bool left_open = p > 0, right_open = p + 1 < n;
    while (left_open || right_open) {
      const double dl = left_open ? y[i] - y_sorted[lo - 1] : INFINITY;
      const double dr = right_open ? y_sorted[hi + 1] - y[i] : INFINITY;
      const bool go_left = dl <= dr;
      const double dy = go_left ? dl : dr;
      if (heap.size() == kk && dy >= heap.top()) break;
      const std::size_t j = go_left ? by_y[--lo] : by_y[++hi];
      const double d = std::max(dy, xdist(i, j));
      if (heap.size() < kk) {
        heap.push(d);
      } else if (d < heap.top()) {
        heap.pop();
        heap.push(d);
      }
      if (go_left) left_open = lo > 0; else right_open = hi + 1 < n;
    }
    const double eps = heap.top();

    const auto ny_lo = std::upper_bound(y_sorted.begin(), y_sorted.end(), y[i] - eps);
    const auto ny_hi = std::lower_bound(y_sorted.begin(), y_sorted.end(), y[i] + eps);
    const auto ny = static_cast<double>(std::distance(ny_lo, ny_hi)) - 1.0;

    const double x0 = x[i * dx];
    const auto xs_lo = std::upper_bound(x0_sorted.begin(), x0_sorted.end(), x0 - eps);
    const auto xs_hi = std::lower_bound(x0_sorted.begin(), x0_sorted.end(), x0 + eps);
    double nx = 0.0;
    if (dx == 1) {
      nx = static_cast<double>(std::distance(xs_lo, xs_hi)) - 1.0;
    } else {
      for (auto it = xs_lo; it != xs_hi; ++it) {
        const std::size_t j = by_x0[static_cast<std::size_t>(it - x0_sorted.begin())];
        if (j != i && xdist(i, j) < eps) nx += 1.0;
      }
    }
    acc += digamma(nx + 1.0) + digamma(ny + 1.0);
  }
  return digamma(static_cast<double>(k)) + digamma(static_cast<double>(n)) -
         acc / static_cast<double>(n);
}

std::uint64_t sweep_cell_seed(std::uint64_t seed, std::size_t n_idx, std::size_t sigma_idx) {
  return derive_seed(seed, "infodyn:sweep", n_idx * 1000003ULL + sigma_idx);
}

LagDesign lag_design(std::span<const double> y, int n_lags, double sigma,
                     std::uint64_t noise_seed, bool include_current) {
  if (n_lags < 1) throw ConfigError("history length must be >= 1");
  if (y.size() < static_cast<std::size_t>(n_lags) + 2) {
    throw InputError("series of length " + std::to_string(y.size()) +
                     " is too short for history length " + std::to_string(n_lags));
  }
  const auto lags = static_cast<std::size_t>(n_lags);
  const std::size_t rows = y.size() - lags;
  const std::size_t dim = lags + (include_current ? 1 : 0);
  Rng rng(noise_seed);
  LagDesign out;
  out.history.dim = dim;
  out.history.data.resize(rows * dim);
  out.current.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = r + lags;
    out.current[r] = y[t];
    std::size_t c = 0;
    if (include_current) {
      const double e = standard_normal(rng);
      out.history.data[r * dim + c++] = y[t] + sigma * e;
    }
    for (std::size_t l = 1; l <= lags; ++l) {
      const double e = standard_normal(rng);
      out.history.data[r * dim + c++] = y[t - l] + sigma * e;
    }
  }
  return out;
}

namespace {

void check_sweep_inputs(const HrSeries& y, const std::vector<int>& n_values,
                        const std::vector<double>& sigma_values) {
  if (n_values.empty() || sigma_values.empty()) throw ConfigError("empty sweep ranges");
  const int max_n = *std::max_element(n_values.begin(), n_values.end());
  if (y.values.size() < static_cast<std::size_t>(max_n) + 2) {
    throw InputError("series shorter than max history length + 2");
  }
  for (double s : sigma_values) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("noise sigma must be finite and >= 0");
  }
  require_finite(y.values, "series");
}

}  // namespace

MiGrid mi_noise_sweep(const HrSeries& y, const std::vector<int>& n_values,
                      const std::vector<double>& sigma_values, std::uint64_t seed,
                      const SweepOptions& opts, int jobs) {
  check_sweep_inputs(y, n_values, sigma_values);
  MiGrid grid{n_values, sigma_values, std::vector<double>(n_values.size() * sigma_values.size()),
              GridMetric::mi};
  const std::size_t ns = sigma_values.size();
  parallel_for(grid.cells.size(), jobs, [&](std::size_t c) {
    const std::size_t i = c / ns;
    const std::size_t j = c % ns;
    const std::uint64_t cell_seed = sweep_cell_seed(seed, i, j);
    const LagDesign d =
        lag_design(y.values, n_values[i], sigma_values[j], cell_seed, opts.include_current);
    grid.cells[c] = opts.estimator == MiEstimator::histogram
                        ? mi_hist(d.history, d.current, opts.bins)
                        : mi_ksg(d.history, d.current, opts.k, cell_seed);
  });
  return grid;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw InputError("pearson needs equal lengths >= 2");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw InputError("correlation undefined for zero-variance input");
  return sab / std::sqrt(saa * sbb);
}

MiGrid pcc_sweep(const HrSeries& y, const std::vector<int>& n_values,
                 const std::vector<double>& sigma_values, std::uint64_t seed,
                 bool include_current) {
  check_sweep_inputs(y, n_values, sigma_values);
  MiGrid grid{n_values, sigma_values, std::vector<double>(n_values.size() * sigma_values.size()),
              GridMetric::pcc_sum};
  const std::size_t ns = sigma_values.size();
  for (std::size_t c = 0; c < grid.cells.size(); ++c) {
    const std::size_t i = c / ns;
    const std::size_t j = c % ns;
    const LagDesign d = lag_design(y.values, n_values[i], sigma_values[j],
                                   sweep_cell_seed(seed, i, j), include_current);
    const std::size_t rows = d.current.size();
    std::vector<double> col(rows);
    double sum = 0.0;
    for (std::size_t l = 0; l < d.history.dim; ++l) {
      for (std::size_t r = 0; r < rows; ++r) col[r] = d.history.data[r * d.history.dim + l];
      sum += std::abs(pearson(d.current, col));
    }
    grid.cells[c] = sum;
  }
  return grid;
}

TransferEntropyResult transfer_entropy(std::span<const double> src, std::span<const double> dst,
                                       const TransferEntropyConfig& cfg) {
  if (cfg.lag < 1) throw ConfigError("transfer entropy lag must be >= 1");
  if (cfg.bins < 2) throw ConfigError("transfer entropy needs at least 2 bins");
  if (cfg.source_lag < 0) throw ConfigError("source lag must be >= 0");
  if (src.size() != dst.size()) throw InputError("transfer entropy: series lengths differ");
  const auto start = static_cast<std::size_t>(std::max(cfg.lag, cfg.source_lag));
  if (src.size() <= start + 1) throw InputError("series too short for the configured lags");
  require_finite(src, "source");
  require_finite(dst, "destination");

  const std::vector<int> sb = bin_all(src, cfg.bins);
  const std::vector<int> db = bin_all(dst, cfg.bins);
  const auto B = static_cast<std::uint64_t>(cfg.bins);

  // z = destination history code; counts of (x,y,z), (x,z), (y,z), (z).
  std::unordered_map<std::uint64_t, std::size_t> cxyz, cxz, cyz, cz;
  std::size_t n = 0;
  for (std::size_t t = start; t < dst.size(); ++t) {
    std::uint64_t z = 0;
    for (int l = 1; l <= cfg.lag; ++l) z = z * B + static_cast<std::uint64_t>(db[t - static_cast<std::size_t>(l)]);
    const auto xv = static_cast<std::uint64_t>(db[t]);
    const auto yv = static_cast<std::uint64_t>(sb[t - static_cast<std::size_t>(cfg.source_lag)]);
    ++cxyz[(z * B + xv) * B + yv];
    ++cxz[z * B + xv];
    ++cyz[z * B + yv];
    ++cz[z];
    ++n;
  }
  double te = 0.0;
  const double nn = static_cast<double>(n);
  for (const auto& [key, c] : cxyz) {
    const std::uint64_t yv = key % B;
    const std::uint64_t xv = (key / B) % B;
    const std::uint64_t z = key / (B * B);
    const double num = static_cast<double>(c) * static_cast<double>(cz[z]);
    const double den = static_cast<double>(cxz[z * B + xv]) * static_cast<double>(cyz[z * B + yv]);
    te += static_cast<double>(c) / nn * std::log(num / den);
  }
  TransferEntropyResult r;
  r.nats = std::max(te, 0.0);
  double cells = 1.0;
  for (int i = 0; i < cfg.lag + 2; ++i) cells *= static_cast<double>(cfg.bins);
  r.mean_occupancy = nn / cells;
  r.sparse_bins = r.mean_occupancy < 5.0;
  if (r.sparse_bins) {
    log::warn("transfer entropy: mean bin occupancy " + std::to_string(r.mean_occupancy) +
              " < 5; estimate is unreliable");
  }
  return r;
}

std::string to_string(GridMetric m) { return m == GridMetric::mi ? "mi" : "pcc_sum"; }

void write_grid_csv(std::ostream& os, const MiGrid& grid) {
  os << "n,sigma,value,metric\n";
  const auto old = os.precision(17);
  for (std::size_t i = 0; i < grid.n_values.size(); ++i) {
    for (std::size_t j = 0; j < grid.sigma_values.size(); ++j) {
      os << grid.n_values[i] << ',' << grid.sigma_values[j] << ',' << grid.at(i, j) << ','
         << to_string(grid.metric) << '\n';
    }
  }
  os.precision(old);
}

HrSeries read_series_csv(std::istream& is, const std::string& name) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError(name + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "hr_bpm") throw ParseError(name + ":1: expected header `hr_bpm`");
  HrSeries s;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(line, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != line.size() || !std::isfinite(v)) {
      throw ParseError(name + ":" + std::to_string(lineno) + ": not a finite number: " + line);
    }
    s.values.push_back(v);
  }
  return s;
}

}  // namespace hrdyn
