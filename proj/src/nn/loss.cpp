#include "hrdyn/nn/loss.hpp"

#include "hrdyn/error.hpp"

#include <cmath>

namespace hrdyn::nn {

LossResult mae_loss(const Tensor& pred, const Tensor& target) {
  if (pred.size() == 0) throw InputError("mae_loss on an empty batch");
  if (pred.size() != target.size()) {
    throw ShapeError("mae_loss: pred " + shape_str(pred.shape) + " vs target " +
                     shape_str(target.shape));
  }
  const double n = static_cast<double>(pred.size());
  LossResult r{0.0, Tensor(pred.shape)};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.data[i] - target.data[i];
    r.loss += std::abs(d);
    r.grad.data[i] = d > 0.0 ? 1.0 / n : (d < 0.0 ? -1.0 / n : 0.0);
  }
  r.loss /= n;
  return r;
}

}  // namespace hrdyn::nn
