#pragma once

#include "hrdyn/nn/tensor.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace hrdyn::nn {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-6;  // L2 term added to the gradient
};

struct AdamMoments {
  Tensor m;
  Tensor v;
};

// Adam with bias correction (Kingma & Ba). Weight decay is coupled: the
// gradient becomes g + weight_decay * theta before the moment updates.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Throws NumericError and leaves every parameter and moment untouched if
  // any gradient is non-finite.
  void step(std::span<Parameter* const> params);

  double lr() const { return cfg_.lr; }
  void set_lr(double lr) { cfg_.lr = lr; }
  long long step_count() const { return steps_; }
  const AdamConfig& config() const { return cfg_; }
  const std::map<std::string, AdamMoments>& moments() const { return moments_; }

  // Checkpoint restore.
  void restore(long long steps, std::map<std::string, AdamMoments> moments);

 private:
  AdamConfig cfg_;
  long long steps_ = 0;
  std::map<std::string, AdamMoments> moments_;
};

// Multiplies the learning rate by `factor` once the monitored loss has gone
// `patience` consecutive epochs without improving on the best value by more
// than `threshold`. The stagnation counter restarts after each reduction.
class PlateauScheduler {
 public:
  PlateauScheduler(double factor = 0.1, int patience = 10, double threshold = 1e-12)
      : factor_(factor), patience_(patience), threshold_(threshold) {}

  // Returns the learning rate to use from now on.
  double step(double loss, double lr);
  bool reduced_last_step() const { return reduced_; }
  int stagnant_epochs() const { return bad_epochs_; }

 private:
  double factor_;
  int patience_;
  double threshold_;
  double best_ = 0.0;
  bool has_best_ = false;
  int bad_epochs_ = 0;
  bool reduced_ = false;
};

// Learning rate after replaying a loss history through a PlateauScheduler.
double plateau_lr(std::span<const double> history, double initial_lr, double factor = 0.1,
                  int patience = 10);

// Signals a stop after `patience` consecutive epochs without improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience = 30, double threshold = 1e-12)
      : patience_(patience), threshold_(threshold) {}

  // Returns true when training should stop after this epoch.
  bool step(double loss);
  bool improved_last_step() const { return improved_; }
  int stagnant_epochs() const { return bad_epochs_; }

 private:
  int patience_;
  double threshold_;
  double best_ = 0.0;
  bool has_best_ = false;
  int bad_epochs_ = 0;
  bool improved_ = false;
};

}  // namespace hrdyn::nn
