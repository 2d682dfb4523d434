#include "hrdyn/nn/layers.hpp"

#include "hrdyn/error.hpp"

#include <cmath>

namespace hrdyn::nn {

namespace {

void require_rank(const Tensor& t, int rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_str(t.shape));
  }
}

RowMatrix im2col(const double* x, int c_in, int len, int kernel, int stride, int len_out) {
  RowMatrix cols(c_in * kernel, len_out);
  for (int c = 0; c < c_in; ++c) {
    const double* row = x + static_cast<std::ptrdiff_t>(c) * len;
    for (int j = 0; j < kernel; ++j) {
      double* dst = cols.data() + static_cast<std::ptrdiff_t>(c * kernel + j) * len_out;
      for (int t = 0; t < len_out; ++t) dst[t] = row[t * stride + j];
    }
  }
  return cols;
}

}  // namespace

Tensor linear_forward(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 2, "linear input");
  require_rank(weight, 2, "linear weight");
  const int n = x.dim(0), in = x.dim(1), out = weight.dim(0);
  if (weight.dim(1) != in) {
    throw ShapeError("linear: input " + shape_str(x.shape) + " incompatible with weight " +
                     shape_str(weight.shape));
  }
  require_shape(bias, {out}, "linear bias");
  Tensor y({n, out});
  auto Y = as_matrix(y, n, out);
  Y.noalias() = as_matrix(x, n, in) * as_matrix(weight, out, in).transpose();
  Y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.data.data(), out);
  return y;
}

Tensor conv1d_forward(const Tensor& x, const Tensor& kernels, const Tensor& bias, int stride) {
  require_rank(x, 3, "conv1d input");
  require_rank(kernels, 3, "conv1d kernels");
  if (stride < 1) throw ShapeError("conv1d stride must be >= 1");
  const int n = x.dim(0), c_in = x.dim(1), len = x.dim(2);
  const int c_out = kernels.dim(0), k = kernels.dim(2);
  if (kernels.dim(1) != c_in) {
    throw ShapeError("conv1d: input " + shape_str(x.shape) + " incompatible with kernels " +
                     shape_str(kernels.shape));
  }
  if (len < k) {
    throw ShapeError("conv1d: input length " + std::to_string(len) + " shorter than kernel " +
                     std::to_string(k) + " (input " + shape_str(x.shape) + ", kernels " +
                     shape_str(kernels.shape) + ")");
  }
  require_shape(bias, {c_out}, "conv1d bias");
  const int len_out = conv1d_output_length(len, k, stride);
  Tensor y({n, c_out, len_out});
  const auto W = as_matrix(kernels, c_out, c_in * k);
  const Eigen::Map<const Eigen::VectorXd> b(bias.data.data(), c_out);
  for (int s = 0; s < n; ++s) {
    const RowMatrix cols =
        im2col(x.data.data() + static_cast<std::ptrdiff_t>(s) * c_in * len, c_in, len, k, stride,
               len_out);
    MatrixMap Y(y.data.data() + static_cast<std::ptrdiff_t>(s) * c_out * len_out, c_out, len_out);
    Y.noalias() = W * cols;
    Y.colwise() += b;
  }
  return y;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor maxpool1d(const Tensor& x, int pool) {
  MaxPool1d p(pool);
  return p.forward(x);
}

Tensor batchnorm1d(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state,
                   Mode mode, double momentum, double eps) {
  BatchNorm1d bn("bn", x.rank() == 3 ? x.dim(1) : 0, momentum, eps);
  bn.gamma.value = gamma;
  bn.beta.value = beta;
  bn.state = state;
  Tensor y = bn.forward(x, mode);
  state = bn.state;
  return y;
}

void init_uniform_fan_in(Tensor& t, int fan_in, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  for (double& v : t.data) v = (2.0 * uniform01(rng) - 1.0) * bound;
}

// ---- Linear ---------------------------------------------------------------

Linear::Linear(const std::string& name, int in, int out)
    : weight(name + ".weight", Tensor({out, in})), bias(name + ".bias", Tensor({out})),
      in_(in), out_(out) {}

void Linear::init(Rng& rng) {
  init_uniform_fan_in(weight.value, in_, rng);
  bias.value.fill(0.0);
}

Tensor Linear::forward(const Tensor& x) {
  x_ = x;
  return linear_forward(x, weight.value, bias.value);
}

Tensor Linear::backward(const Tensor& dy) {
  const int n = x_.dim(0);
  require_shape(dy, {n, out_}, "linear grad");
  const auto dY = as_matrix(dy, n, out_);
  as_matrix(weight.grad, out_, in_).noalias() += dY.transpose() * as_matrix(x_, n, in_);
  Eigen::Map<Eigen::RowVectorXd>(bias.grad.data.data(), out_) += dY.colwise().sum();
  Tensor dx({n, in_});
  as_matrix(dx, n, in_).noalias() = dY * as_matrix(weight.value, out_, in_);
  return dx;
}

void Linear::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

// ---- Conv1d ---------------------------------------------------------------

Conv1d::Conv1d(const std::string& name, int c_in, int c_out, int kernel, int stride)
    : weight(name + ".weight", Tensor({c_out, c_in, kernel})),
      bias(name + ".bias", Tensor({c_out})), c_in_(c_in), c_out_(c_out), kernel_(kernel),
      stride_(stride) {}

void Conv1d::init(Rng& rng) {
  init_uniform_fan_in(weight.value, c_in_ * kernel_, rng);
  bias.value.fill(0.0);
}

Tensor Conv1d::forward(const Tensor& x) {
  Tensor y = conv1d_forward(x, weight.value, bias.value, stride_);
  x_shape_ = x.shape;
  const int n = x.dim(0), len = x.dim(2), len_out = y.dim(2);
  cols_.resize(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    cols_[static_cast<std::size_t>(s)] =
        im2col(x.data.data() + static_cast<std::ptrdiff_t>(s) * c_in_ * len, c_in_, len, kernel_,
               stride_, len_out);
  }
  return y;
}

Tensor Conv1d::backward(const Tensor& dy) {
  const int n = x_shape_[0], len = x_shape_[2];
  const int len_out = conv1d_output_length(len, kernel_, stride_);
  require_shape(dy, {n, c_out_, len_out}, "conv1d grad");
  Tensor dx(x_shape_);
  auto dW = as_matrix(weight.grad, c_out_, c_in_ * kernel_);
  const auto W = as_matrix(weight.value, c_out_, c_in_ * kernel_);
  Eigen::Map<Eigen::VectorXd> db(bias.grad.data.data(), c_out_);
  for (int s = 0; s < n; ++s) {
    const ConstMatrixMap dY(dy.data.data() + static_cast<std::ptrdiff_t>(s) * c_out_ * len_out,
                            c_out_, len_out);
    const RowMatrix& cols = cols_[static_cast<std::size_t>(s)];
    dW.noalias() += dY * cols.transpose();
    db += dY.rowwise().sum();
    const RowMatrix dcols = W.transpose() * dY;
    double* dxs = dx.data.data() + static_cast<std::ptrdiff_t>(s) * c_in_ * len;
    for (int c = 0; c < c_in_; ++c) {
      for (int j = 0; j < kernel_; ++j) {
        const double* src = dcols.data() + static_cast<std::ptrdiff_t>(c * kernel_ + j) * len_out;
        double* row = dxs + static_cast<std::ptrdiff_t>(c) * len;
        for (int t = 0; t < len_out; ++t) row[t * stride_ + j] += src[t];
      }
    }
  }
  return dx;
}

void Conv1d::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

// ---- BatchNorm1d ----------------------------------------------------------

BatchNorm1d::BatchNorm1d(const std::string& n, int channels, double momentum, double eps)
    : gamma(n + ".gamma", Tensor({channels}, 1.0)), beta(n + ".beta", Tensor({channels})),
      state{Tensor({channels}, 0.0), Tensor({channels}, 1.0)}, name(n), momentum_(momentum),
      eps_(eps) {}

Tensor BatchNorm1d::forward(const Tensor& x, Mode mode) {
  require_rank(x, 3, "batchnorm input");
  const int n = x.dim(0), c = x.dim(1), len = x.dim(2);
  require_shape(gamma.value, {c}, "batchnorm gamma");
  require_shape(beta.value, {c}, "batchnorm beta");
  mode_ = mode;
  const double count = static_cast<double>(n) * len;
  if (mode == Mode::train && count < 2.0) {
    throw InputError("batchnorm in train mode needs at least 2 values per channel");
  }
  Tensor y(x.shape);
  xhat_ = Tensor(x.shape);
  inv_std_.assign(static_cast<std::size_t>(c), 0.0);
  for (int ch = 0; ch < c; ++ch) {
    double mean = 0.0, var = 0.0;
    if (mode == Mode::train) {
      for (int s = 0; s < n; ++s) {
        const double* row = x.data.data() + (static_cast<std::size_t>(s) * c + ch) * len;
        for (int t = 0; t < len; ++t) mean += row[t];
      }
      mean /= count;
      for (int s = 0; s < n; ++s) {
        const double* row = x.data.data() + (static_cast<std::size_t>(s) * c + ch) * len;
        for (int t = 0; t < len; ++t) var += (row[t] - mean) * (row[t] - mean);
      }
      var /= count;
      auto& rm = state.running_mean.data[static_cast<std::size_t>(ch)];
      auto& rv = state.running_var.data[static_cast<std::size_t>(ch)];
      rm = (1.0 - momentum_) * rm + momentum_ * mean;
      rv = (1.0 - momentum_) * rv + momentum_ * var * count / (count - 1.0);
    } else {
      mean = state.running_mean.data[static_cast<std::size_t>(ch)];
      var = state.running_var.data[static_cast<std::size_t>(ch)];
    }
    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[static_cast<std::size_t>(ch)] = inv;
    const double g = gamma.value.data[static_cast<std::size_t>(ch)];
    const double b = beta.value.data[static_cast<std::size_t>(ch)];
    for (int s = 0; s < n; ++s) {
      const std::size_t off = (static_cast<std::size_t>(s) * c + ch) * len;
      for (int t = 0; t < len; ++t) {
        const double xh = (x.data[off + t] - mean) * inv;
        xhat_.data[off + t] = xh;
        y.data[off + t] = g * xh + b;
      }
    }
  }
  return y;
}

Tensor BatchNorm1d::backward(const Tensor& dy) {
  require_shape(dy, xhat_.shape, "batchnorm grad");
  const int n = dy.dim(0), c = dy.dim(1), len = dy.dim(2);
  const double count = static_cast<double>(n) * len;
  Tensor dx(dy.shape);
  for (int ch = 0; ch < c; ++ch) {
    const double g = gamma.value.data[static_cast<std::size_t>(ch)];
    const double inv = inv_std_[static_cast<std::size_t>(ch)];
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int s = 0; s < n; ++s) {
      const std::size_t off = (static_cast<std::size_t>(s) * c + ch) * len;
      for (int t = 0; t < len; ++t) {
        sum_dy += dy.data[off + t];
        sum_dy_xhat += dy.data[off + t] * xhat_.data[off + t];
      }
    }
    gamma.grad.data[static_cast<std::size_t>(ch)] += sum_dy_xhat;
    beta.grad.data[static_cast<std::size_t>(ch)] += sum_dy;
    for (int s = 0; s < n; ++s) {
      const std::size_t off = (static_cast<std::size_t>(s) * c + ch) * len;
      for (int t = 0; t < len; ++t) {
        if (mode_ == Mode::train) {
          dx.data[off + t] = g * inv / count *
                             (count * dy.data[off + t] - sum_dy - xhat_.data[off + t] * sum_dy_xhat);
        } else {
          dx.data[off + t] = g * inv * dy.data[off + t];
        }
      }
    }
  }
  return dx;
}

void BatchNorm1d::collect(std::vector<Parameter*>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

void BatchNorm1d::collect_buffers(std::vector<Buffer>& out) {
  out.push_back({name + ".running_mean", &state.running_mean});
  out.push_back({name + ".running_var", &state.running_var});
}

// ---- ReLU / MaxPool1d -----------------------------------------------------

Tensor ReLU::forward(const Tensor& x) {
  x_ = x;
  return relu(x);
}

Tensor ReLU::backward(const Tensor& dy) const {
  require_shape(dy, x_.shape, "relu grad");
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!(x_.data[i] > 0.0)) dx.data[i] = 0.0;
  }
  return dx;
}

Tensor MaxPool1d::forward(const Tensor& x) {
  if (pool_ < 1) throw ShapeError("pool size must be >= 1");
  if (x.rank() < 1) throw ShapeError("maxpool needs rank >= 1");
  const int len = x.shape.back();
  const int len_out = len / pool_;
  Shape out_shape = x.shape;
  out_shape.back() = len_out;
  Tensor y(out_shape);
  const std::size_t rows = len == 0 ? 0 : x.size() / static_cast<std::size_t>(len);
  x_shape_ = x.shape;
  argmax_.assign(y.size(), 0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (int t = 0; t < len_out; ++t) {
      std::size_t best = r * static_cast<std::size_t>(len) + static_cast<std::size_t>(t * pool_);
      for (int j = 1; j < pool_; ++j) {
        const std::size_t cand =
            r * static_cast<std::size_t>(len) + static_cast<std::size_t>(t * pool_ + j);
        if (x.data[cand] > x.data[best]) best = cand;
      }
      const std::size_t o = r * static_cast<std::size_t>(len_out) + static_cast<std::size_t>(t);
      y.data[o] = x.data[best];
      argmax_[o] = best;
    }
  }
  return y;
}

Tensor MaxPool1d::backward(const Tensor& dy) const {
  Tensor dx(x_shape_);
  if (dy.size() != argmax_.size()) throw ShapeError("maxpool grad size mismatch");
  for (std::size_t o = 0; o < dy.size(); ++o) dx.data[argmax_[o]] += dy.data[o];
  return dx;
}

}  // namespace hrdyn::nn
