#include "hrdyn/nn/gradcheck.hpp"

#include "hrdyn/error.hpp"
#include "hrdyn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace hrdyn::nn {

GradCheckResult grad_check(const std::function<double()>& loss,
                           const std::function<void()>& compute_grads,
                           std::span<Parameter* const> params, const GradCheckOptions& opts) {
  compute_grads();
  // Snapshot analytic gradients; loss() may run forwards that touch caches.
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const Parameter* p : params) analytic.push_back(p->grad);

  Rng rng(derive_seed(opts.seed, "nn:gradcheck"));
  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    std::vector<std::size_t> coords(p.value.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (opts.coords_per_tensor > 0 && coords.size() > opts.coords_per_tensor) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(opts.coords_per_tensor);
    }
    for (std::size_t i : coords) {
      const double orig = p.value.data[i];
      const double h = 1e-5 * std::max(1.0, std::abs(orig));
      p.value.data[i] = orig + h;
      const double up = loss();
      p.value.data[i] = orig - h;
      const double down = loss();
      p.value.data[i] = orig;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericError("non-finite loss during gradient check at " + p.name);
      }
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[pi].data[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), opts.abs_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.checked;
      if (rel > result.max_rel_error || result.worst.empty()) {
        if (rel >= result.max_rel_error) {
          result.max_rel_error = rel;
          result.worst = p.name + "[" + std::to_string(i) + "]";
        }
      }
    }
  }
  return result;
}

}  // namespace hrdyn::nn
