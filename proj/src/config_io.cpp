#include "hrdyn/config_io.hpp"

#include "hrdyn/error.hpp"

#include <cmath>
#include <set>

namespace hrdyn {

using nlohmann::json;

namespace {

// Copies j[key] into `field` when present.
class Reader {
 public:
  Reader(const json& j, const char* what) : j_(j), what_(what) {
    if (!j.is_object()) throw ConfigError(std::string(what) + " config must be a JSON object");
  }

  template <typename T>
  Reader& get(const char* key, T& field) {
    seen_.insert(key);
    if (!j_.contains(key)) return *this;
    try {
      field = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string(what_) + "." + key + ": " + e.what());
    }
    return *this;
  }

  // Marks a key handled elsewhere.
  Reader& skip(const char* key) {
    seen_.insert(key);
    return *this;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(std::string("unknown ") + what_ + " key '" + k + "'");
    }
  }

 private:
  const json& j_;
  const char* what_;
  std::set<std::string> seen_;
};

}  // namespace

json to_json(const SynthConfig& c) {
  return {{"duration_s", c.duration_s},
          {"fs_hz", c.fs_hz},
          {"window_s", c.window_s},
          {"hop_s", c.hop_s},
          {"hr_mean_bpm", c.hr_mean_bpm},
          {"hr_std_bpm", c.hr_std_bpm},
          {"artifact_rate", c.artifact_rate},
          {"snr_db", std::isfinite(c.snr_db) ? json(c.snr_db) : json(nullptr)},
          {"seed", c.seed},
          {"activity_dwell_s", c.activity_dwell_s},
          {"relax_rate", c.relax_rate},
          {"walk_std_bpm", c.walk_std_bpm},
          {"oscillation_bpm", c.oscillation_bpm},
          {"oscillation_period_s", c.oscillation_period_s},
          {"abrupt_jump_fraction", c.abrupt_jump_fraction},
          {"harmonic_amplitude", c.harmonic_amplitude},
          {"wander_amplitude", c.wander_amplitude},
          {"wander_hz", c.wander_hz},
          {"artifact_gain", c.artifact_gain}};
}

SynthConfig synth_config_from_json(const json& j, SynthConfig c) {
  Reader r(j, "synth");
  r.get("duration_s", c.duration_s)
      .get("fs_hz", c.fs_hz)
      .get("window_s", c.window_s)
      .get("hop_s", c.hop_s)
      .get("hr_mean_bpm", c.hr_mean_bpm)
      .get("hr_std_bpm", c.hr_std_bpm)
      .get("artifact_rate", c.artifact_rate)
      .get("seed", c.seed)
      .get("activity_dwell_s", c.activity_dwell_s)
      .get("relax_rate", c.relax_rate)
      .get("walk_std_bpm", c.walk_std_bpm)
      .get("oscillation_bpm", c.oscillation_bpm)
      .get("oscillation_period_s", c.oscillation_period_s)
      .get("abrupt_jump_fraction", c.abrupt_jump_fraction)
      .get("harmonic_amplitude", c.harmonic_amplitude)
      .get("wander_amplitude", c.wander_amplitude)
      .get("wander_hz", c.wander_hz)
      .get("artifact_gain", c.artifact_gain)
      .skip("snr_db");
  // JSON has no infinity; null stands for "no white noise".
  if (j.contains("snr_db")) {
    const json& v = j.at("snr_db");
    if (v.is_null()) {
      c.snr_db = std::numeric_limits<double>::infinity();
    } else if (v.is_number()) {
      c.snr_db = v.get<double>();
    } else {
      throw ConfigError("synth.snr_db must be a number or null");
    }
  }
  r.finish();
  return c;
}

json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},
          {"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"plateau_patience", c.plateau_patience},
          {"plateau_factor", c.plateau_factor},
          {"early_stop_patience", c.early_stop_patience},
          {"augment", c.augment},
          {"aug_fraction", c.aug_fraction},
          {"aug_sigma", c.aug_sigma},
          {"k_history", c.k_history},
          {"seed", c.seed},
          {"max_epochs", c.max_epochs},
          {"inner_folds", c.inner_folds},
          {"xi_train_source", to_string(c.xi_train_source)}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  Reader r(j, "train");
  std::string xi_source = to_string(c.xi_train_source);
  r.get("batch_size", c.batch_size)
      .get("lr", c.lr)
      .get("weight_decay", c.weight_decay)
      .get("plateau_patience", c.plateau_patience)
      .get("plateau_factor", c.plateau_factor)
      .get("early_stop_patience", c.early_stop_patience)
      .get("augment", c.augment)
      .get("aug_fraction", c.aug_fraction)
      .get("aug_sigma", c.aug_sigma)
      .get("k_history", c.k_history)
      .get("seed", c.seed)
      .get("max_epochs", c.max_epochs)
      .get("inner_folds", c.inner_folds)
      .get("xi_train_source", xi_source)
      .finish();
  c.xi_train_source = xi_source_from_string(xi_source);
  return c;
}

json to_json(const SegmentationConfig& c) {
  return {{"window_s", c.window_s},
          {"hop_s", c.hop_s},
          {"low_hz", c.low_hz},
          {"high_hz", c.high_hz},
          {"filter_order", c.filter_order}};
}

SegmentationConfig segmentation_config_from_json(const json& j, SegmentationConfig c) {
  Reader(j, "segmentation")
      .get("window_s", c.window_s)
      .get("hop_s", c.hop_s)
      .get("low_hz", c.low_hz)
      .get("high_hz", c.high_hz)
      .get("filter_order", c.filter_order)
      .finish();
  return c;
}

json to_json(const SpectralConfig& c) {
  return {{"fft_len", c.fft_len}, {"low_hz", c.low_hz}, {"high_hz", c.high_hz}, {"fs_hz", c.fs_hz}};
}

SpectralConfig spectral_config_from_json(const json& j, SpectralConfig c) {
  Reader(j, "spectral")
      .get("fft_len", c.fft_len)
      .get("low_hz", c.low_hz)
      .get("high_hz", c.high_hz)
      .get("fs_hz", c.fs_hz)
      .finish();
  return c;
}

json to_json(const SweepOptions& c) {
  return {{"estimator", to_string(c.estimator)},
          {"bins", c.bins},
          {"k", c.k},
          {"include_current", c.include_current}};
}

SweepOptions sweep_options_from_json(const json& j, SweepOptions c) {
  std::string est = to_string(c.estimator);
  Reader(j, "sweep")
      .get("estimator", est)
      .get("bins", c.bins)
      .get("k", c.k)
      .get("include_current", c.include_current)
      .finish();
  c.estimator = mi_estimator_from_string(est);
  return c;
}

std::string to_string(XiSource s) { return s == XiSource::labels ? "labels" : "predictions"; }

XiSource xi_source_from_string(const std::string& s) {
  if (s == "labels") return XiSource::labels;
  if (s == "predictions") return XiSource::predictions;
  throw ConfigError("xi source must be 'labels' or 'predictions', got '" + s + "'");
}

std::string to_string(MiEstimator e) { return e == MiEstimator::ksg ? "ksg" : "hist"; }

MiEstimator mi_estimator_from_string(const std::string& s) {
  if (s == "ksg") return MiEstimator::ksg;
  if (s == "hist" || s == "histogram") return MiEstimator::histogram;
  throw EstimatorChoiceError("unknown MI estimator '" + s + "' (expected ksg or hist)");
}

}  // namespace hrdyn
