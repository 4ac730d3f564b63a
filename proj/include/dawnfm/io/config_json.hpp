#pragma once

#include <json.hpp>

#include <set>
#include <string>
#include <vector>

#include "dawnfm/infer/ensemble.hpp"
#include "dawnfm/nn/model.hpp"
#include "dawnfm/train/config.hpp"

namespace dawnfm::io {

using Json = nlohmann::ordered_json;

/// Strict reader for one JSON object: every key must be consumed, and every
/// error names the full field path.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError((path_.empty() ? "config" : path_) + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(field(key) + ": " + e.what());
    }
  }

  template <typename T>
  void require(const std::string& key, T& out) {
    if (!j_.contains(key)) throw ConfigError(field(key) + ": missing required field");
    get(key, out);
  }

  const Json& sub(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(field(key) + ": missing required field");
    used_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!used_.count(key)) throw ConfigError(field(key) + ": unknown key");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline Json to_json(const nn::ModelConfig& c) {
  Json j;
  j["variant"] = nn::to_string(c.variant);
  j["input_shape"] = c.input_shape;
  j["widths"] = c.widths;
  j["embed_dim"] = c.embed_dim;
  j["noise_conditioning"] = c.noise_conditioning;
  j["mlp_hidden"] = c.mlp_hidden;
  j["time_scale"] = c.time_scale;
  j["noise_scale"] = c.noise_scale;
  return j;
}

/// Fields absent from `j` keep their value from `base`; naming a different
/// variant starts from that variant's defaults instead.
inline nn::ModelConfig model_config_from_json(const Json& j, const std::string& path = "model",
                                              const nn::ModelConfig& base = {}) {
  ObjectReader r(j, path);
  nn::ModelConfig c = base;
  std::string variant = nn::to_string(c.variant);
  r.get("variant", variant);
  if (variant != "mlp" && variant != "unet") {
    throw ConfigError(r.field("variant") + ": expected \"mlp\" or \"unet\", got \"" + variant + "\"");
  }
  if (variant != nn::to_string(base.variant)) {
    c = variant == "mlp" ? nn::ModelConfig::toy_mlp(true) : nn::ModelConfig{};
  }
  r.get("input_shape", c.input_shape);
  r.get("widths", c.widths);
  r.get("embed_dim", c.embed_dim);
  r.get("noise_conditioning", c.noise_conditioning);
  r.get("mlp_hidden", c.mlp_hidden);
  r.get("time_scale", c.time_scale);
  r.get("noise_scale", c.noise_scale);
  r.finish();
  if (c.embed_dim == 0) throw ConfigError(r.field("embed_dim") + ": must be positive");
  return c;
}

inline Json to_json(const train::TrainConfig& c) {
  Json j;
  j["alpha"] = c.alpha;
  j["lr_init"] = c.lr_init;
  j["lr_min"] = c.lr_min;
  j["max_epochs"] = c.max_epochs;
  j["batch_size"] = c.batch_size;
  j["p_low"] = c.p_low;
  j["p_high"] = c.p_high;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["adam_eps"] = c.adam_eps;
  j["seed"] = c.seed;
  j["micro_batch"] = c.micro_batch;
  j["noise_reference"] = train::to_string(c.noise_reference);
  j["checkpoint_every"] = c.checkpoint_every;
  return j;
}

inline train::TrainConfig train_config_from_json(const Json& j, const std::string& path = "train",
                                                const train::TrainConfig& base = {}) {
  ObjectReader r(j, path);
  train::TrainConfig c = base;
  r.get("alpha", c.alpha);
  r.get("lr_init", c.lr_init);
  r.get("lr_min", c.lr_min);
  r.get("max_epochs", c.max_epochs);
  r.get("batch_size", c.batch_size);
  r.get("p_low", c.p_low);
  r.get("p_high", c.p_high);
  r.get("beta1", c.beta1);
  r.get("beta2", c.beta2);
  r.get("adam_eps", c.adam_eps);
  r.get("seed", c.seed);
  r.get("micro_batch", c.micro_batch);
  std::string ref = train::to_string(c.noise_reference);
  r.get("noise_reference", ref);
  if (ref == "sample") {
    c.noise_reference = train::NoiseReference::per_sample;
  } else if (ref == "dataset") {
    c.noise_reference = train::NoiseReference::dataset;
  } else {
    throw ConfigError(r.field("noise_reference") + ": expected \"sample\" or \"dataset\"");
  }
  r.get("checkpoint_every", c.checkpoint_every);
  r.finish();
  c.validate();
  return c;
}

inline Json to_json(const infer::InferenceConfig& c) {
  Json j;
  j["n_steps"] = c.n_steps;
  j["ensemble_size"] = c.ensemble_size;
  j["seed"] = c.seed;
  j["noise_percent"] = c.noise_percent;
  return j;
}

inline infer::InferenceConfig inference_config_from_json(const Json& j, const std::string& path = "inference",
                                                        const infer::InferenceConfig& base = {}) {
  ObjectReader r(j, path);
  infer::InferenceConfig c = base;
  r.get("n_steps", c.n_steps);
  r.get("ensemble_size", c.ensemble_size);
  r.get("seed", c.seed);
  r.get("noise_percent", c.noise_percent);
  r.finish();
  c.validate();
  return c;
}

}  // namespace dawnfm::io
