#pragma once

#include "hrdyn/nn/tensor.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>

namespace hrdyn::nn {

struct GradCheckOptions {
  // Coordinates sampled per tensor; 0 checks every coordinate.
  std::size_t coords_per_tensor = 0;
  std::uint64_t seed = 0;
  // Relative error is |a - n| / max(|a|, |n|, abs_floor).
  double abs_floor = 1e-6;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "name[index]"
  std::size_t checked = 0;
};

// Central finite differences against backprop. `compute_grads` must zero the
// gradients and fill them for the current parameter values; `loss` must
// evaluate the loss without side effects on the result. Each perturbation is
// h = 1e-5 * max(1, |theta_i|).
GradCheckResult grad_check(const std::function<double()>& loss,
                           const std::function<void()>& compute_grads,
                           std::span<Parameter* const> params, const GradCheckOptions& opts = {});

}  // namespace hrdyn::nn
