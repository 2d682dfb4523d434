#include "hrdyn/checkpoint.hpp"

#include "hrdyn/error.hpp"

#include <fstream>

namespace hrdyn {

using nlohmann::json;

json to_json(const ModelConfig& c) {
  return json{{"k_history", c.k_history},
              {"xi_embed_dim", c.xi_embed_dim},
              {"encoder_hidden", c.encoder_hidden},
              {"conv_channels", c.conv_channels},
              {"conv_kernels", c.conv_kernels},
              {"conv_stride", c.conv_stride},
              {"pool", c.pool},
              {"decoder_hidden", c.decoder_hidden},
              {"mlp_hidden", c.mlp_hidden},
              {"conditioning", to_string(c.conditioning)},
              {"xi_order", c.xi_order == XiOrder::oldest_first ? "oldest_first" : "newest_first"},
              {"bn_momentum", c.bn_momentum},
              {"lstm_forget_bias", c.lstm_forget_bias}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  try {
    if (j.contains("preset")) c = model_preset(j.at("preset").get<std::string>());
    c.k_history = j.value("k_history", c.k_history);
    c.xi_embed_dim = j.value("xi_embed_dim", c.xi_embed_dim);
    c.encoder_hidden = j.value("encoder_hidden", c.encoder_hidden);
    c.conv_channels = j.value("conv_channels", c.conv_channels);
    c.conv_kernels = j.value("conv_kernels", c.conv_kernels);
    c.conv_stride = j.value("conv_stride", c.conv_stride);
    c.pool = j.value("pool", c.pool);
    c.decoder_hidden = j.value("decoder_hidden", c.decoder_hidden);
    c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
    if (j.contains("conditioning")) {
      c.conditioning = conditioning_from_string(j.at("conditioning").get<std::string>());
    }
    if (j.contains("xi_order")) {
      const auto o = j.at("xi_order").get<std::string>();
      if (o == "oldest_first") c.xi_order = XiOrder::oldest_first;
      else if (o == "newest_first") c.xi_order = XiOrder::newest_first;
      else throw ConfigError("unknown xi_order '" + o + "'");
    }
    c.bn_momentum = j.value("bn_momentum", c.bn_momentum);
    c.lstm_forget_bias = j.value("lstm_forget_bias", c.lstm_forget_bias);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
  validate(c);
  return c;
}

json tensor_to_json(const nn::Tensor& t) { return json{{"shape", t.shape}, {"data", t.data}}; }

nn::Tensor tensor_from_json(const json& j) {
  try {
    return nn::Tensor(j.at("shape").get<nn::Shape>(), j.at("data").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed tensor: ") + e.what());
  }
}

json checkpoint_to_json(HrModel& model, const nn::Adam* optimizer) {
  json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["config"] = to_json(model.config());
  json tensors = json::object();
  for (const nn::Parameter* p : model.parameters()) tensors[p->name] = tensor_to_json(p->value);
  j["tensors"] = tensors;
  json buffers = json::object();
  for (const nn::Buffer& b : model.buffers()) buffers[b.name] = tensor_to_json(*b.value);
  j["buffers"] = buffers;
  if (optimizer != nullptr) {
    const auto& cfg = optimizer->config();
    json moments = json::object();
    for (const auto& [name, m] : optimizer->moments()) {
      moments[name] = json{{"m", tensor_to_json(m.m)}, {"v", tensor_to_json(m.v)}};
    }
    j["optimizer"] = json{{"step", optimizer->step_count()}, {"lr", cfg.lr},
                          {"beta1", cfg.beta1},           {"beta2", cfg.beta2},
                          {"eps", cfg.eps},               {"weight_decay", cfg.weight_decay},
                          {"moments", moments}};
  }
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  if (!j.is_object() || !j.contains("format_version")) {
    throw ParseError("checkpoint lacks format_version");
  }
  const int version = j.at("format_version").get<int>();
  if (version != kCheckpointFormatVersion) {
    throw ParseError("unsupported checkpoint format_version " + std::to_string(version));
  }
  Checkpoint ck{HrModel(model_config_from_json(j.at("config"))), std::nullopt};
  const json& tensors = j.at("tensors");
  for (nn::Parameter* p : ck.model.parameters()) {
    if (!tensors.contains(p->name)) throw ParseError("checkpoint missing tensor " + p->name);
    nn::Tensor t = tensor_from_json(tensors.at(p->name));
    nn::require_shape(t, p->value.shape, p->name.c_str());
    p->value = std::move(t);
  }
  if (j.contains("buffers")) {
    for (const nn::Buffer& b : ck.model.buffers()) {
      if (!j["buffers"].contains(b.name)) continue;
      nn::Tensor t = tensor_from_json(j["buffers"].at(b.name));
      nn::require_shape(t, b.value->shape, b.name.c_str());
      *b.value = std::move(t);
    }
  }
  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    nn::AdamConfig cfg{o.at("lr").get<double>(), o.at("beta1").get<double>(),
                       o.at("beta2").get<double>(), o.at("eps").get<double>(),
                       o.at("weight_decay").get<double>()};
    nn::Adam adam(cfg);
    std::map<std::string, nn::AdamMoments> moments;
    for (const auto& [name, m] : o.at("moments").items()) {
      moments[name] = {tensor_from_json(m.at("m")), tensor_from_json(m.at("v"))};
    }
    adam.restore(o.at("step").get<long long>(), std::move(moments));
    ck.optimizer = std::move(adam);
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, HrModel& model, const nn::Adam* optimizer) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write checkpoint " + path.string());
  os << checkpoint_to_json(model, optimizer).dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open checkpoint " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace hrdyn
