#pragma once

#include "hrdyn/datagen.hpp"
#include "hrdyn/harness.hpp"
#include "hrdyn/infodyn.hpp"
#include "hrdyn/signal.hpp"
#include "hrdyn/spectral.hpp"

#include <json.hpp>

#include <string>

namespace hrdyn {

// JSON views of the run configurations. The *_from_json readers start from
// `base` and overwrite only the keys present; unknown keys raise ConfigError.

nlohmann::json to_json(const SynthConfig& c);
SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig base = {});

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

nlohmann::json to_json(const SegmentationConfig& c);
SegmentationConfig segmentation_config_from_json(const nlohmann::json& j,
                                                 SegmentationConfig base = {});

nlohmann::json to_json(const SpectralConfig& c);
SpectralConfig spectral_config_from_json(const nlohmann::json& j, SpectralConfig base = {});

nlohmann::json to_json(const SweepOptions& c);
SweepOptions sweep_options_from_json(const nlohmann::json& j, SweepOptions base = {});

std::string to_string(XiSource s);
XiSource xi_source_from_string(const std::string& s);
std::string to_string(MiEstimator e);
MiEstimator mi_estimator_from_string(const std::string& s);

}  // namespace hrdyn
