#pragma once

#include "hrdyn/model.hpp"
#include "hrdyn/nn/optim.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>

namespace hrdyn {

inline constexpr int kCheckpointFormatVersion = 1;

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json tensor_to_json(const nn::Tensor& t);
nn::Tensor tensor_from_json(const nlohmann::json& j);

struct Checkpoint {
  HrModel model;
  std::optional<nn::Adam> optimizer;
};

// {format_version, config, tensors: {name: {shape, data}}, buffers: {...},
//  optimizer?: {step, lr, beta1, beta2, eps, weight_decay, moments}}
nlohmann::json checkpoint_to_json(HrModel& model, const nn::Adam* optimizer = nullptr);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, HrModel& model,
                     const nn::Adam* optimizer = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hrdyn
