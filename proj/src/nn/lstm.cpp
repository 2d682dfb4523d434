#include "hrdyn/nn/lstm.hpp"

#include "hrdyn/error.hpp"
#include "hrdyn/nn/layers.hpp"

#include <cmath>

namespace hrdyn::nn {

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

Lstm::Lstm(const std::string& name, int input_size, int hidden_size)
    : w_ih(name + ".w_ih", Tensor({4 * hidden_size, input_size})),
      w_hh(name + ".w_hh", Tensor({4 * hidden_size, hidden_size})),
      bias(name + ".bias", Tensor({4 * hidden_size})), in_(input_size), hidden_(hidden_size) {}

void Lstm::init(Rng& rng, double forget_bias) {
  init_uniform_fan_in(w_ih.value, hidden_, rng);
  init_uniform_fan_in(w_hh.value, hidden_, rng);
  bias.value.fill(0.0);
  for (int j = hidden_; j < 2 * hidden_; ++j) bias.value.data[static_cast<std::size_t>(j)] = forget_bias;
}

LstmOutput Lstm::forward(const Tensor& x_seq, const Tensor& h0, const Tensor& c0) {
  if (x_seq.rank() != 3 || x_seq.dim(2) != in_) {
    throw ShapeError("lstm input " + shape_str(x_seq.shape) + " does not match input size " +
                     std::to_string(in_));
  }
  const int n = x_seq.dim(0), len = x_seq.dim(1), H = hidden_;
  require_shape(h0, {n, H}, "lstm h0");
  require_shape(c0, {n, H}, "lstm c0");
  n_ = n;
  len_ = len;
  x_.assign(static_cast<std::size_t>(len), RowMatrix());
  h_prev_.assign(static_cast<std::size_t>(len), RowMatrix());
  c_prev_.assign(static_cast<std::size_t>(len), RowMatrix());
  gates_.assign(static_cast<std::size_t>(len), RowMatrix());
  tanh_c_.assign(static_cast<std::size_t>(len), RowMatrix());

  const auto Wih = as_matrix(w_ih.value, 4 * H, in_);
  const auto Whh = as_matrix(w_hh.value, 4 * H, H);
  const Eigen::Map<const Eigen::RowVectorXd> b(bias.value.data.data(), 4 * H);

  RowMatrix h = as_matrix(h0, n, H);
  RowMatrix c = as_matrix(c0, n, H);
  LstmOutput out{Tensor({n, len, H}), Tensor({n, H}), Tensor({n, H})};
  for (int t = 0; t < len; ++t) {
    RowMatrix xt(n, in_);
    for (int s = 0; s < n; ++s) {
      const double* src = x_seq.data.data() + (static_cast<std::size_t>(s) * len + t) * in_;
      std::copy(src, src + in_, xt.row(s).data());
    }
    RowMatrix g = xt * Wih.transpose();
    g.noalias() += h * Whh.transpose();
    g.rowwise() += b;
    for (int s = 0; s < n; ++s) {
      double* gr = g.row(s).data();
      for (int j = 0; j < H; ++j) {
        gr[j] = sigmoid(gr[j]);
        gr[H + j] = sigmoid(gr[H + j]);
        gr[2 * H + j] = std::tanh(gr[2 * H + j]);
        gr[3 * H + j] = sigmoid(gr[3 * H + j]);
      }
    }
    RowMatrix c_new(n, H), tc(n, H), h_new(n, H);
    for (int s = 0; s < n; ++s) {
      const double* gr = g.row(s).data();
      for (int j = 0; j < H; ++j) {
        c_new(s, j) = gr[H + j] * c(s, j) + gr[j] * gr[2 * H + j];
        tc(s, j) = std::tanh(c_new(s, j));
        h_new(s, j) = gr[3 * H + j] * tc(s, j);
      }
    }
    const auto ts = static_cast<std::size_t>(t);
    x_[ts] = std::move(xt);
    h_prev_[ts] = std::move(h);
    c_prev_[ts] = std::move(c);
    gates_[ts] = std::move(g);
    tanh_c_[ts] = std::move(tc);
    h = std::move(h_new);
    c = std::move(c_new);
    for (int s = 0; s < n; ++s) {
      double* dst = out.h_seq.data.data() + (static_cast<std::size_t>(s) * len + t) * H;
      std::copy(h.row(s).data(), h.row(s).data() + H, dst);
    }
  }
  as_matrix(out.h_last, n, H) = h;
  as_matrix(out.c_last, n, H) = c;
  return out;
}

LstmGrads Lstm::backward(const Tensor& dh_seq, const Tensor& dh_last, const Tensor& dc_last) {
  const int n = n_, len = len_, H = hidden_;
  const bool has_seq = !dh_seq.data.empty();
  if (has_seq) require_shape(dh_seq, {n, len, H}, "lstm dh_seq");
  require_shape(dh_last, {n, H}, "lstm dh_last");
  require_shape(dc_last, {n, H}, "lstm dc_last");
  if (static_cast<int>(gates_.size()) != len) throw Error("lstm backward without forward");

  const auto Wih = as_matrix(w_ih.value, 4 * H, in_);
  const auto Whh = as_matrix(w_hh.value, 4 * H, H);
  auto dWih = as_matrix(w_ih.grad, 4 * H, in_);
  auto dWhh = as_matrix(w_hh.grad, 4 * H, H);
  Eigen::Map<Eigen::RowVectorXd> db(bias.grad.data.data(), 4 * H);

  LstmGrads grads{Tensor({n, len, in_}), Tensor({n, H}), Tensor({n, H})};
  RowMatrix dh = as_matrix(dh_last, n, H);
  RowMatrix dc = as_matrix(dc_last, n, H);
  RowMatrix dg(n, 4 * H);
  for (int t = len - 1; t >= 0; --t) {
    const auto ts = static_cast<std::size_t>(t);
    if (has_seq) {
      for (int s = 0; s < n; ++s) {
        const double* src = dh_seq.data.data() + (static_cast<std::size_t>(s) * len + t) * H;
        for (int j = 0; j < H; ++j) dh(s, j) += src[j];
      }
    }
    const RowMatrix& g = gates_[ts];
    const RowMatrix& tc = tanh_c_[ts];
    const RowMatrix& cp = c_prev_[ts];
    for (int s = 0; s < n; ++s) {
      for (int j = 0; j < H; ++j) {
        const double gi = g(s, j), gf = g(s, H + j), gc = g(s, 2 * H + j), go = g(s, 3 * H + j);
        const double dcs = dc(s, j) + dh(s, j) * go * (1.0 - tc(s, j) * tc(s, j));
        dg(s, j) = dcs * gc * gi * (1.0 - gi);
        dg(s, H + j) = dcs * cp(s, j) * gf * (1.0 - gf);
        dg(s, 2 * H + j) = dcs * gi * (1.0 - gc * gc);
        dg(s, 3 * H + j) = dh(s, j) * tc(s, j) * go * (1.0 - go);
        dc(s, j) = dcs * gf;
      }
    }
    dWih.noalias() += dg.transpose() * x_[ts];
    dWhh.noalias() += dg.transpose() * h_prev_[ts];
    db += dg.colwise().sum();
    const RowMatrix dx = dg * Wih;
    for (int s = 0; s < n; ++s) {
      double* dst = grads.dx_seq.data.data() + (static_cast<std::size_t>(s) * len + t) * in_;
      std::copy(dx.row(s).data(), dx.row(s).data() + in_, dst);
    }
    dh = dg * Whh;
  }
  as_matrix(grads.dh0, n, H) = dh;
  as_matrix(grads.dc0, n, H) = dc;
  return grads;
}

void Lstm::collect(std::vector<Parameter*>& out) {
  out.push_back(&w_ih);
  out.push_back(&w_hh);
  out.push_back(&bias);
}

LstmOutput lstm_forward(const Tensor& x_seq, const Tensor& w_ih, const Tensor& w_hh,
                        const Tensor& bias, const Tensor& h0, const Tensor& c0) {
  if (w_ih.rank() != 2 || w_ih.dim(0) % 4 != 0) {
    throw ShapeError("lstm w_ih must be [4H, in], got " + shape_str(w_ih.shape));
  }
  Lstm cell("lstm", w_ih.dim(1), w_ih.dim(0) / 4);
  require_shape(w_hh, cell.w_hh.value.shape, "lstm w_hh");
  require_shape(bias, cell.bias.value.shape, "lstm bias");
  cell.w_ih.value = w_ih;
  cell.w_hh.value = w_hh;
  cell.bias.value = bias;
  return cell.forward(x_seq, h0, c0);
}

}  // namespace hrdyn::nn
