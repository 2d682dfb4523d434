#pragma once

#include "hrdyn/nn/tensor.hpp"
#include "hrdyn/rng.hpp"

#include <string>
#include <vector>

namespace hrdyn::nn {

struct LstmOutput {
  Tensor h_seq;   // [n, len, hidden]
  Tensor h_last;  // [n, hidden]
  Tensor c_last;  // [n, hidden]
};

struct LstmGrads {
  Tensor dx_seq;  // [n, len, in]
  Tensor dh0;     // [n, hidden]
  Tensor dc0;     // [n, hidden]
};

// Single-layer LSTM, gate order (input, forget, cell, output):
//   g = x W_ih^T + h W_hh^T + b
//   c' = sigmoid(f) * c + sigmoid(i) * tanh(g_cell)
//   h' = sigmoid(o) * tanh(c')
class Lstm {
 public:
  Lstm() = default;
  Lstm(const std::string& name, int input_size, int hidden_size);

  // Uniform(+-sqrt(1/hidden)) weights, zero bias except forget gate = forget_bias.
  void init(Rng& rng, double forget_bias = 1.0);

  LstmOutput forward(const Tensor& x_seq, const Tensor& h0, const Tensor& c0);

  // Backpropagation through time. dh_seq may be empty (treated as zeros);
  // dh_last and dc_last are gradients flowing into the final state.
  LstmGrads backward(const Tensor& dh_seq, const Tensor& dh_last, const Tensor& dc_last);

  void collect(std::vector<Parameter*>& out);

  int input_size() const { return in_; }
  int hidden_size() const { return hidden_; }
  static std::size_t parameter_count(int in, int hidden) {
    return 4 * static_cast<std::size_t>(hidden) * (in + hidden) + 4 * static_cast<std::size_t>(hidden);
  }

  Parameter w_ih;  // [4H, in]
  Parameter w_hh;  // [4H, H]
  Parameter bias;  // [4H]

 private:
  int in_ = 0;
  int hidden_ = 0;
  int n_ = 0;
  int len_ = 0;
  std::vector<RowMatrix> x_;      // per step [n, in]
  std::vector<RowMatrix> h_prev_; // per step [n, H]
  std::vector<RowMatrix> c_prev_;
  std::vector<RowMatrix> gates_;  // activated gates [n, 4H]
  std::vector<RowMatrix> tanh_c_;
};

// Stateless convenience wrapper around Lstm::forward.
LstmOutput lstm_forward(const Tensor& x_seq, const Tensor& w_ih, const Tensor& w_hh,
                        const Tensor& bias, const Tensor& h0, const Tensor& c0);

}  // namespace hrdyn::nn
