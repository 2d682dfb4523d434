#pragma once

#include "hrdyn/nn/gradcheck.hpp"
#include "hrdyn/nn/layers.hpp"
#include "hrdyn/nn/lstm.hpp"
#include "hrdyn/nn/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hrdyn {

enum class Conditioning { encoder_decoder, mlp_concat, none };
enum class XiOrder { oldest_first, newest_first };

std::string to_string(Conditioning c);
Conditioning conditioning_from_string(const std::string& s);

struct ModelConfig {
  int k_history = 5;
  int xi_embed_dim = 50;
  int encoder_hidden = 64;
  std::vector<int> conv_channels{16, 32};
  std::vector<int> conv_kernels{7, 5};
  int conv_stride = 1;
  int pool = 2;
  int decoder_hidden = 64;
  int mlp_hidden = 50;  // both layers of the mlp_concat history branch
  Conditioning conditioning = Conditioning::encoder_decoder;
  XiOrder xi_order = XiOrder::oldest_first;
  double bn_momentum = 0.1;
  double lstm_forget_bias = 1.0;

  bool operator==(const ModelConfig&) const = default;
};

// Named presets: "desk" (fast CI scale) and "paper-scale" (~430k parameters).
ModelConfig model_preset(const std::string& name);

// Throws ConfigError for inconsistent settings.
void validate(const ModelConfig& cfg);

// Closed-form trainable parameter count (batch-norm running stats excluded).
std::size_t param_count(const ModelConfig& cfg);

// Fixed affine HR scaling used for xi inputs and the regression target.
inline double xi_scale(double bpm) { return (bpm - 100.0) / 60.0; }
inline double xi_unscale(double v) { return v * 60.0 + 100.0; }

// Encoder-decoder HR estimator.
//
//   encoder_decoder: xi (K steps) -> Linear(1->50) -> ReLU -> encoder LSTM;
//                    its final (h, c) seeds the decoder LSTM.
//   mlp_concat:      xi -> two-layer MLP, concatenated with the decoder's last
//                    hidden state before the output layer.
//   none:            decoder starts from a zero state; xi is ignored.
//
// The PPG branch is conv -> batchnorm -> ReLU -> maxpool blocks whose output
// channels form the decoder's input sequence. The decoder's last hidden state
// goes through Linear(->1). Outputs are in scaled HR units (see xi_scale).
class HrModel {
 public:
  explicit HrModel(ModelConfig cfg);

  // Fan-in uniform weights, zero biases, LSTM forget bias from the config.
  static HrModel build(const ModelConfig& cfg, std::uint64_t seed);

  // x [n, len] normalized PPG, xi [n, K] scaled HR history in chronological
  // order (oldest first). Returns [n] scaled predictions.
  nn::Tensor forward(const nn::Tensor& x, const nn::Tensor& xi, nn::Mode mode);

  // Accumulates parameter gradients for the last forward.
  void backward(const nn::Tensor& d_out);

  // Eval-mode prediction in bpm; does not touch this instance's caches, so
  // concurrent calls on a shared model are safe.
  std::vector<double> predict_bpm(const nn::Tensor& x, const nn::Tensor& xi_bpm) const;

  std::vector<nn::Parameter*> parameters();
  std::vector<nn::Buffer> buffers();
  void zero_grad();
  std::size_t counted_parameters() const;

  const ModelConfig& config() const { return cfg_; }
  int xi_width() const;

 private:
  struct ConvBlock {
    nn::Conv1d conv;
    nn::BatchNorm1d bn;
    nn::ReLU relu;
    nn::MaxPool1d pool{2};
  };

  ModelConfig cfg_;
  nn::Linear xi_embed_;
  nn::ReLU xi_relu_;
  nn::Lstm encoder_;
  nn::Linear mlp1_, mlp2_;
  nn::ReLU mlp_relu1_, mlp_relu2_;
  std::vector<ConvBlock> blocks_;
  nn::Lstm decoder_;
  nn::Linear head_;

  int batch_ = 0;
  nn::Shape feature_shape_;
};

// Finite-difference check of the whole model on a random batch, using the
// smooth loss sum_i w_i * out_i with fixed random weights w.
nn::GradCheckResult check_model_gradients(const ModelConfig& cfg, std::uint64_t seed, int batch,
                                          int input_len, const nn::GradCheckOptions& opts = {});

}  // namespace hrdyn
