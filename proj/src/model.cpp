#include "hrdyn/model.hpp"

#include "hrdyn/error.hpp"
#include "hrdyn/rng.hpp"

namespace hrdyn {

using nn::Mode;
using nn::Tensor;

std::string to_string(Conditioning c) {
  switch (c) {
    case Conditioning::encoder_decoder: return "encoder_decoder";
    case Conditioning::mlp_concat: return "mlp_concat";
    case Conditioning::none: return "none";
  }
  return "none";
}

Conditioning conditioning_from_string(const std::string& s) {
  if (s == "encoder_decoder") return Conditioning::encoder_decoder;
  if (s == "mlp_concat") return Conditioning::mlp_concat;
  if (s == "none") return Conditioning::none;
  throw ConfigError("unknown conditioning '" + s + "' (encoder_decoder|mlp_concat|none)");
}

ModelConfig model_preset(const std::string& name) {
  ModelConfig cfg;
  if (name == "desk") return cfg;
  if (name == "paper-scale") {
    cfg.conv_channels = {32, 64, 128};
    cfg.conv_kernels = {7, 5, 5};
    cfg.encoder_hidden = 176;
    cfg.decoder_hidden = 176;
    return cfg;
  }
  throw ConfigError("unknown model preset '" + name + "' (desk|paper-scale)");
}

void validate(const ModelConfig& cfg) {
  if (cfg.conv_channels.size() != cfg.conv_kernels.size()) {
    throw ConfigError("conv_channels and conv_kernels must have equal length");
  }
  if (cfg.conv_channels.empty()) throw ConfigError("at least one conv block is required");
  for (std::size_t i = 0; i < cfg.conv_channels.size(); ++i) {
    if (cfg.conv_channels[i] <= 0 || cfg.conv_kernels[i] <= 0) {
      throw ConfigError("conv channels and kernels must be positive");
    }
  }
  if (cfg.decoder_hidden <= 0 || cfg.conv_stride <= 0 || cfg.pool <= 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (cfg.conditioning != Conditioning::none) {
    if (cfg.k_history < 1) throw ConfigError("k_history must be >= 1 for conditioned models");
  } else if (cfg.k_history < 0) {
    throw ConfigError("k_history must be >= 0");
  }
  if (cfg.conditioning == Conditioning::encoder_decoder) {
    if (cfg.xi_embed_dim <= 0 || cfg.encoder_hidden <= 0) {
      throw ConfigError("encoder dimensions must be positive");
    }
    if (cfg.encoder_hidden != cfg.decoder_hidden) {
      throw ConfigError("encoder_hidden must equal decoder_hidden: the encoder's final state "
                        "initializes the decoder");
    }
  }
  if (cfg.conditioning == Conditioning::mlp_concat && cfg.mlp_hidden <= 0) {
    throw ConfigError("mlp_hidden must be positive");
  }
}

std::size_t param_count(const ModelConfig& cfg) {
  validate(cfg);
  auto lstm = [](std::size_t in, std::size_t h) { return 4 * h * (in + h) + 4 * h; };
  std::size_t total = 0;
  std::size_t c_in = 1;
  for (std::size_t i = 0; i < cfg.conv_channels.size(); ++i) {
    const auto c = static_cast<std::size_t>(cfg.conv_channels[i]);
    const auto k = static_cast<std::size_t>(cfg.conv_kernels[i]);
    total += c * c_in * k + c + 2 * c;  // kernel, bias, gamma, beta
    c_in = c;
  }
  const auto hd = static_cast<std::size_t>(cfg.decoder_hidden);
  total += lstm(c_in, hd);
  std::size_t head_in = hd;
  switch (cfg.conditioning) {
    case Conditioning::encoder_decoder: {
      const auto e = static_cast<std::size_t>(cfg.xi_embed_dim);
      total += 2 * e;  // Linear(1 -> e)
      total += lstm(e, static_cast<std::size_t>(cfg.encoder_hidden));
      break;
    }
    case Conditioning::mlp_concat: {
      const auto m = static_cast<std::size_t>(cfg.mlp_hidden);
      const auto k = static_cast<std::size_t>(cfg.k_history);
      total += (k * m + m) + (m * m + m);
      head_in += m;
      break;
    }
    case Conditioning::none: break;
  }
  total += head_in + 1;
  return total;
}

HrModel::HrModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  int c_in = 1;
  for (std::size_t i = 0; i < cfg_.conv_channels.size(); ++i) {
    const std::string name = "conv" + std::to_string(i);
    ConvBlock b{nn::Conv1d(name, c_in, cfg_.conv_channels[i], cfg_.conv_kernels[i], cfg_.conv_stride),
                nn::BatchNorm1d("bn" + std::to_string(i), cfg_.conv_channels[i], cfg_.bn_momentum),
                nn::ReLU{}, nn::MaxPool1d(cfg_.pool)};
    blocks_.push_back(std::move(b));
    c_in = cfg_.conv_channels[i];
  }
  decoder_ = nn::Lstm("decoder", c_in, cfg_.decoder_hidden);
  int head_in = cfg_.decoder_hidden;
  if (cfg_.conditioning == Conditioning::encoder_decoder) {
    xi_embed_ = nn::Linear("xi_embed", 1, cfg_.xi_embed_dim);
    encoder_ = nn::Lstm("encoder", cfg_.xi_embed_dim, cfg_.encoder_hidden);
  } else if (cfg_.conditioning == Conditioning::mlp_concat) {
    mlp1_ = nn::Linear("xi_mlp1", cfg_.k_history, cfg_.mlp_hidden);
    mlp2_ = nn::Linear("xi_mlp2", cfg_.mlp_hidden, cfg_.mlp_hidden);
    head_in += cfg_.mlp_hidden;
  }
  head_ = nn::Linear("head", head_in, 1);
}

HrModel HrModel::build(const ModelConfig& cfg, std::uint64_t seed) {
  HrModel m(cfg);
  Rng rng(derive_seed(seed, "model:init"));
  for (auto& b : m.blocks_) b.conv.init(rng);
  m.decoder_.init(rng, cfg.lstm_forget_bias);
  if (cfg.conditioning == Conditioning::encoder_decoder) {
    m.xi_embed_.init(rng);
    m.encoder_.init(rng, cfg.lstm_forget_bias);
  } else if (cfg.conditioning == Conditioning::mlp_concat) {
    m.mlp1_.init(rng);
    m.mlp2_.init(rng);
  }
  m.head_.init(rng);
  return m;
}

int HrModel::xi_width() const {
  return cfg_.conditioning == Conditioning::none ? 0 : cfg_.k_history;
}

Tensor HrModel::forward(const Tensor& x, const Tensor& xi, Mode mode) {
  if (x.rank() != 2) throw ShapeError("model input must be [n, len], got " + nn::shape_str(x.shape));
  const int n = x.dim(0);
  const int len = x.dim(1);
  batch_ = n;

  Tensor h = x.reshaped({n, 1, len});
  for (auto& b : blocks_) {
    h = b.conv.forward(h);
    h = b.bn.forward(h, mode);
    h = b.relu.forward(h);
    h = b.pool.forward(h);
  }
  if (h.dim(2) < 1) throw ShapeError("input length " + std::to_string(len) + " too short for conv stack");
  feature_shape_ = h.shape;
  const Tensor seq = nn::swap_last_two(h);  // [n, steps, channels]

  const int hd = cfg_.decoder_hidden;
  Tensor h0({n, hd}), c0({n, hd});
  Tensor mlp_out;
  if (cfg_.conditioning != Conditioning::none) {
    nn::require_shape(xi, {n, cfg_.k_history}, "xi");
    const int K = cfg_.k_history;
    Tensor xi_ordered = xi;
    if (cfg_.xi_order == XiOrder::newest_first) {
      for (int s = 0; s < n; ++s) {
        for (int j = 0; j < K; ++j) {
          xi_ordered.data[static_cast<std::size_t>(s * K + j)] =
              xi.data[static_cast<std::size_t>(s * K + (K - 1 - j))];
        }
      }
    }
    if (cfg_.conditioning == Conditioning::encoder_decoder) {
      Tensor e = xi_embed_.forward(xi_ordered.reshaped({n * K, 1}));
      e = xi_relu_.forward(e);
      const auto enc = encoder_.forward(e.reshaped({n, K, cfg_.xi_embed_dim}),
                                        Tensor({n, cfg_.encoder_hidden}),
                                        Tensor({n, cfg_.encoder_hidden}));
      h0 = enc.h_last;
      c0 = enc.c_last;
    } else {
      mlp_out = mlp_relu1_.forward(mlp1_.forward(xi_ordered));
      mlp_out = mlp_relu2_.forward(mlp2_.forward(mlp_out));
    }
  }
  const auto dec = decoder_.forward(seq, h0, c0);
  Tensor head_in = dec.h_last;
  if (cfg_.conditioning == Conditioning::mlp_concat) {
    const int m = cfg_.mlp_hidden;
    head_in = Tensor({n, hd + m});
    for (int s = 0; s < n; ++s) {
      std::copy_n(dec.h_last.data.begin() + s * hd, hd, head_in.data.begin() + s * (hd + m));
      std::copy_n(mlp_out.data.begin() + s * m, m, head_in.data.begin() + s * (hd + m) + hd);
    }
  }
  return head_.forward(head_in).reshaped({n});
}

void HrModel::backward(const Tensor& d_out) {
  const int n = batch_;
  nn::require_shape(d_out, {n}, "model output grad");
  const int hd = cfg_.decoder_hidden;
  const Tensor d_head_in = head_.backward(d_out.reshaped({n, 1}));
  Tensor dh_last({n, hd});
  if (cfg_.conditioning == Conditioning::mlp_concat) {
    const int m = cfg_.mlp_hidden;
    Tensor d_mlp({n, m});
    for (int s = 0; s < n; ++s) {
      std::copy_n(d_head_in.data.begin() + s * (hd + m), hd, dh_last.data.begin() + s * hd);
      std::copy_n(d_head_in.data.begin() + s * (hd + m) + hd, m, d_mlp.data.begin() + s * m);
    }
    Tensor g = mlp2_.backward(mlp_relu2_.backward(d_mlp));
    mlp1_.backward(mlp_relu1_.backward(g));
  } else {
    dh_last = d_head_in;
  }
  const auto dec = decoder_.backward(Tensor(), dh_last, Tensor({n, hd}));
  if (cfg_.conditioning == Conditioning::encoder_decoder) {
    const auto enc = encoder_.backward(Tensor(), dec.dh0, dec.dc0);
    const int K = cfg_.k_history;
    const Tensor de = xi_relu_.backward(enc.dx_seq.reshaped({n * K, cfg_.xi_embed_dim}));
    xi_embed_.backward(de);
  }
  Tensor g = nn::swap_last_two(dec.dx_seq);
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
    g = it->pool.backward(g);
    g = it->relu.backward(g);
    g = it->bn.backward(g);
    g = it->conv.backward(g);
  }
}

std::vector<double> HrModel::predict_bpm(const Tensor& x, const Tensor& xi_bpm) const {
  HrModel scratch = *this;
  Tensor xi = xi_bpm;
  for (double& v : xi.data) v = xi_scale(v);
  if (cfg_.conditioning == Conditioning::none && xi.size() == 0 && x.rank() == 2) {
    xi = Tensor({x.dim(0), 0});
  }
  const Tensor out = scratch.forward(x, xi, Mode::eval);
  std::vector<double> bpm(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) bpm[i] = xi_unscale(out.data[i]);
  return bpm;
}

std::vector<nn::Parameter*> HrModel::parameters() {
  std::vector<nn::Parameter*> out;
  if (cfg_.conditioning == Conditioning::encoder_decoder) {
    xi_embed_.collect(out);
    encoder_.collect(out);
  } else if (cfg_.conditioning == Conditioning::mlp_concat) {
    mlp1_.collect(out);
    mlp2_.collect(out);
  }
  for (auto& b : blocks_) {
    b.conv.collect(out);
    b.bn.collect(out);
  }
  decoder_.collect(out);
  head_.collect(out);
  return out;
}

std::vector<nn::Buffer> HrModel::buffers() {
  std::vector<nn::Buffer> out;
  for (auto& b : blocks_) b.bn.collect_buffers(out);
  return out;
}

void HrModel::zero_grad() {
  for (nn::Parameter* p : parameters()) p->zero_grad();
}

std::size_t HrModel::counted_parameters() const {
  std::size_t n = 0;
  for (nn::Parameter* p : const_cast<HrModel*>(this)->parameters()) n += p->value.size();
  return n;
}

nn::GradCheckResult check_model_gradients(const ModelConfig& cfg, std::uint64_t seed, int batch,
                                          int input_len, const nn::GradCheckOptions& opts) {
  HrModel model = HrModel::build(cfg, seed);
  Rng rng = make_rng(seed, "model:gradcheck");
  // Zero biases can leave a ReLU input exactly at its kink, where the
  // finite difference sees half the slope.
  for (nn::Parameter* p : model.parameters()) {
    if (p->name.ends_with(".bias")) {
      for (double& v : p->value.data) v = 0.1 * standard_normal(rng);
    }
  }
  Tensor x({batch, input_len});
  for (double& v : x.data) v = standard_normal(rng);
  Tensor xi({batch, model.xi_width()});
  for (double& v : xi.data) v = 0.5 * standard_normal(rng);
  Tensor w({batch});
  for (double& v : w.data) v = standard_normal(rng);

  const auto loss = [&] {
    const Tensor out = model.forward(x, xi, nn::Mode::train);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += w.data[i] * out.data[i];
    return s;
  };
  const auto grads = [&] {
    model.zero_grad();
    model.forward(x, xi, nn::Mode::train);
    model.backward(w);
  };
  const std::vector<nn::Parameter*> params = model.parameters();
  return nn::grad_check(loss, grads, params, opts);
}

}  // namespace hrdyn
