#pragma once

#include "hrdyn/nn/tensor.hpp"

namespace hrdyn::nn {

struct LossResult {
  double loss = 0.0;
  Tensor grad;  // d loss / d pred
};

// Mean absolute error; subgradient sign(pred - target) / n with sign(0) = 0.
LossResult mae_loss(const Tensor& pred, const Tensor& target);

}  // namespace hrdyn::nn
