#include "hrdyn/nn/optim.hpp"

#include "hrdyn/error.hpp"

#include <cmath>

namespace hrdyn::nn {

void Adam::step(std::span<Parameter* const> params) {
  for (const Parameter* p : params) {
    if (p->grad.shape != p->value.shape) {
      throw ShapeError("gradient shape " + shape_str(p->grad.shape) + " does not match parameter " +
                       p->name + " " + shape_str(p->value.shape));
    }
    if (!p->grad.all_finite()) throw NumericError("non-finite gradient for " + p->name);
  }
  if (!(cfg_.lr > 0.0)) throw ConfigError("learning rate must be positive");
  ++steps_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
  for (Parameter* p : params) {
    auto [it, inserted] = moments_.try_emplace(p->name);
    AdamMoments& mom = it->second;
    if (inserted || mom.m.shape != p->value.shape) {
      mom.m = Tensor(p->value.shape);
      mom.v = Tensor(p->value.shape);
    }
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad.data[i] + cfg_.weight_decay * p->value.data[i];
      mom.m.data[i] = cfg_.beta1 * mom.m.data[i] + (1.0 - cfg_.beta1) * g;
      mom.v.data[i] = cfg_.beta2 * mom.v.data[i] + (1.0 - cfg_.beta2) * g * g;
      const double m_hat = mom.m.data[i] / bc1;
      const double v_hat = mom.v.data[i] / bc2;
      p->value.data[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }
}

void Adam::restore(long long steps, std::map<std::string, AdamMoments> moments) {
  steps_ = steps;
  moments_ = std::move(moments);
}

double PlateauScheduler::step(double loss, double lr) {
  reduced_ = false;
  if (!has_best_ || loss < best_ - threshold_) {
    best_ = loss;
    has_best_ = true;
    bad_epochs_ = 0;
    return lr;
  }
  if (++bad_epochs_ >= patience_) {
    bad_epochs_ = 0;
    reduced_ = true;
    return lr * factor_;
  }
  return lr;
}

double plateau_lr(std::span<const double> history, double initial_lr, double factor, int patience) {
  PlateauScheduler sched(factor, patience);
  double lr = initial_lr;
  for (double loss : history) lr = sched.step(loss, lr);
  return lr;
}

bool EarlyStopping::step(double loss) {
  improved_ = false;
  if (!has_best_ || loss < best_ - threshold_) {
    best_ = loss;
    has_best_ = true;
    bad_epochs_ = 0;
    improved_ = true;
    return false;
  }
  return ++bad_epochs_ >= patience_;
}

}  // namespace hrdyn::nn
