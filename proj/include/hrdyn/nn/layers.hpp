#pragma once

#include "hrdyn/nn/tensor.hpp"
#include "hrdyn/rng.hpp"

#include <string>
#include <vector>

namespace hrdyn::nn {

enum class Mode { train, eval };

// ---- stateless forward kernels -------------------------------------------

// y = x W^T + b, x [n,in], W [out,in], b [out].
Tensor linear_forward(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Cross-correlation without kernel flip and without padding:
// x [n,c_in,len], kernels [c_out,c_in,k], bias [c_out] -> [n,c_out,(len-k)/stride+1].
Tensor conv1d_forward(const Tensor& x, const Tensor& kernels, const Tensor& bias, int stride = 1);

inline int conv1d_output_length(int len, int kernel, int stride) {
  return (len - kernel) / stride + 1;
}

Tensor relu(const Tensor& x);

// Non-overlapping max over windows of `pool` along the last axis; a trailing
// remainder shorter than `pool` is dropped.
Tensor maxpool1d(const Tensor& x, int pool = 2);

struct BatchNormState {
  Tensor running_mean;  // [c]
  Tensor running_var;   // [c]
};

// Per-channel normalization of x [n,c,len]. In train mode the batch
// statistics (population variance) are used and the running statistics move
// toward them with `momentum` (running variance tracks the unbiased batch
// variance). In eval mode the running statistics are used.
Tensor batchnorm1d(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state,
                   Mode mode, double momentum = 0.1, double eps = 1e-5);

// ---- layers with cached backward ----------------------------------------

// Weights and kernels: uniform(+-sqrt(1/fan_in)); biases: zero.
void init_uniform_fan_in(Tensor& t, int fan_in, Rng& rng);

class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int in, int out);
  void init(Rng& rng);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void collect(std::vector<Parameter*>& out);

  int in() const { return in_; }
  int out() const { return out_; }

  Parameter weight;
  Parameter bias;

 private:
  int in_ = 0;
  int out_ = 0;
  Tensor x_;
};

class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(const std::string& name, int c_in, int c_out, int kernel, int stride = 1);
  void init(Rng& rng);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void collect(std::vector<Parameter*>& out);

  Parameter weight;  // [c_out, c_in, k]
  Parameter bias;    // [c_out]

 private:
  int c_in_ = 0, c_out_ = 0, kernel_ = 0, stride_ = 1;
  Shape x_shape_;
  std::vector<RowMatrix> cols_;  // im2col per sample
};

class BatchNorm1d {
 public:
  BatchNorm1d() = default;
  BatchNorm1d(const std::string& name, int channels, double momentum = 0.1, double eps = 1e-5);

  Tensor forward(const Tensor& x, Mode mode);
  Tensor backward(const Tensor& dy);
  void collect(std::vector<Parameter*>& out);
  void collect_buffers(std::vector<Buffer>& out);

  Parameter gamma;
  Parameter beta;
  BatchNormState state;
  std::string name;

 private:
  double momentum_ = 0.1;
  double eps_ = 1e-5;
  Mode mode_ = Mode::train;
  Tensor xhat_;
  std::vector<double> inv_std_;
};

class ReLU {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy) const;

 private:
  Tensor x_;
};

class MaxPool1d {
 public:
  explicit MaxPool1d(int pool = 2) : pool_(pool) {}
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy) const;

 private:
  int pool_;
  Shape x_shape_;
  std::vector<std::size_t> argmax_;  // flat input index per output element
};

}  // namespace hrdyn::nn
