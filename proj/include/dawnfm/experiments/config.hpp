#pragma once

#include <filesystem>
#include <string>

#include "dawnfm/io/config_json.hpp"
#include "dawnfm/io/tensor_io.hpp"
#include "dawnfm/ops/blur.hpp"
#include "dawnfm/ops/radon.hpp"
#include "dawnfm/ops/sum.hpp"

namespace dawnfm::experiments {

using io::Json;

struct OperatorConfig {
  /// blur | radon | sum
  std::string kind = "blur";
  std::size_t side = 16;
  double sigma_x = 3.0;
  double sigma_y = 3.0;
  std::size_t n_angles = 360;

  friend bool operator==(const OperatorConfig&, const OperatorConfig&) = default;
};

struct DatasetConfig {
  /// synthetic-phantoms | idx | duathlon-prior
  std::string kind = "synthetic-phantoms";
  std::string path;
  std::size_t side = 16;
  std::size_t train_count = 500;
  std::size_t test_count = 100;
  std::size_t max_ellipses = 4;
  std::uint64_t seed = 1;

  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

struct ExperimentConfig {
  /// deblur | tomo | duathlon
  std::string task = "deblur";
  DatasetConfig dataset;
  OperatorConfig op;
  nn::ModelConfig model = nn::ModelConfig::unet_for(1, 16, true);
  train::TrainConfig train;
  infer::InferenceConfig inference;
  std::string output_dir = "runs/deblur";

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

  /// 16x16 phantom deblurring at desk scale.
  static ExperimentConfig desk_deblur(bool noise_conditioning = true) {
    ExperimentConfig c;
    c.model = nn::ModelConfig::unet_for(1, 16, noise_conditioning);
    c.train.lr_init = 1e-3;
    c.train.lr_min = 1e-5;
    c.inference.ensemble_size = 8;
    return c;
  }

  /// Two-lobe prior observed through A = [1, 1].
  static ExperimentConfig duathlon() {
    ExperimentConfig c;
    c.task = "duathlon";
    c.dataset.kind = "duathlon-prior";
    c.dataset.side = 0;
    c.dataset.train_count = 6400;
    c.dataset.test_count = 200;
    c.dataset.max_ellipses = 0;
    c.op.kind = "sum";
    c.op.side = 0;
    c.model = nn::ModelConfig::toy_mlp(true);
    c.train.lr_init = 1e-3;
    c.train.lr_min = 1e-5;
    c.train.max_epochs = 100;
    c.train.noise_reference = train::NoiseReference::dataset;
    c.inference.ensemble_size = 200;
    c.output_dir = "runs/duathlon";
    return c;
  }
};

inline Json to_json(const OperatorConfig& c) {
  Json j;
  j["kind"] = c.kind;
  if (c.kind != "sum") j["side"] = c.side;
  if (c.kind == "blur") {
    j["sigma_x"] = c.sigma_x;
    j["sigma_y"] = c.sigma_y;
  }
  if (c.kind == "radon") j["n_angles"] = c.n_angles;
  return j;
}

inline OperatorConfig operator_config_from_json(const Json& j, const std::string& path = "operator") {
  io::ObjectReader r(j, path);
  OperatorConfig c;
  r.require("kind", c.kind);
  if (c.kind == "blur") {
    r.require("side", c.side);
    r.get("sigma_x", c.sigma_x);
    r.get("sigma_y", c.sigma_y);
  } else if (c.kind == "radon") {
    r.require("side", c.side);
    r.get("n_angles", c.n_angles);
  } else if (c.kind == "sum") {
    c.side = 0;
  } else {
    throw ConfigError(r.field("kind") + ": expected blur, radon or sum, got \"" + c.kind + "\"");
  }
  r.finish();
  if (c.kind != "sum" && c.side < 1) throw ConfigError(r.field("side") + ": must be >= 1");
  if (c.kind == "blur" && !(c.sigma_x > 0.0 && c.sigma_y > 0.0)) {
    throw ConfigError(r.field("sigma_x") + ": blur widths must be positive");
  }
  if (c.kind == "radon" && c.n_angles < 1) throw ConfigError(r.field("n_angles") + ": must be >= 1");
  return c;
}

inline ops::OperatorPtr make_operator(const OperatorConfig& c) {
  if (c.kind == "blur") return std::make_shared<ops::GaussianBlurOperator>(c.side, c.sigma_x, c.sigma_y);
  if (c.kind == "radon") return std::make_shared<ops::RadonOperator>(c.side, c.n_angles);
  if (c.kind == "sum") return std::make_shared<ops::SumOperator>();
  throw ConfigError("operator.kind: unknown operator \"" + c.kind + "\"");
}

inline Json to_json(const DatasetConfig& c) {
  Json j;
  j["kind"] = c.kind;
  if (c.kind == "idx") j["path"] = c.path;
  if (c.kind == "synthetic-phantoms") {
    j["side"] = c.side;
    j["max_ellipses"] = c.max_ellipses;
  }
  j["train_count"] = c.train_count;
  j["test_count"] = c.test_count;
  if (c.kind != "idx") j["seed"] = c.seed;
  return j;
}

inline DatasetConfig dataset_config_from_json(const Json& j, const std::string& path = "dataset") {
  io::ObjectReader r(j, path);
  DatasetConfig c;
  r.require("kind", c.kind);
  if (c.kind == "synthetic-phantoms") {
    r.get("side", c.side);
    r.get("max_ellipses", c.max_ellipses);
    r.get("seed", c.seed);
    if (c.side < 8) throw ConfigError(r.field("side") + ": phantoms need side >= 8");
    if (c.max_ellipses < 1) throw ConfigError(r.field("max_ellipses") + ": must be >= 1");
  } else if (c.kind == "idx") {
    r.require("path", c.path);
    c.side = 0;
    c.max_ellipses = 0;
    if (!std::filesystem::exists(c.path)) throw ConfigError(r.field("path") + ": file not found: " + c.path);
  } else if (c.kind == "duathlon-prior") {
    r.get("seed", c.seed);
    c.side = 0;
    c.max_ellipses = 0;
  } else {
    throw ConfigError(r.field("kind") + ": expected synthetic-phantoms, idx or duathlon-prior, got \"" + c.kind + "\"");
  }
  r.get("train_count", c.train_count);
  r.get("test_count", c.test_count);
  r.finish();
  if (c.train_count < 1) throw ConfigError(r.field("train_count") + ": must be >= 1");
  return c;
}

inline Json to_json(const ExperimentConfig& c) {
  Json j;
  j["task"] = c.task;
  j["dataset"] = to_json(c.dataset);
  j["operator"] = to_json(c.op);
  j["model"] = io::to_json(c.model);
  j["train"] = io::to_json(c.train);
  j["inference"] = io::to_json(c.inference);
  j["output_dir"] = c.output_dir;
  return j;
}

/// Checks the task, dataset, operator and model agree with each other.
inline void validate(const ExperimentConfig& c) {
  const std::string& t = c.task;
  const std::string& k = c.op.kind;
  if (!((t == "deblur" && k == "blur") || (t == "tomo" && k == "radon") || (t == "duathlon" && k == "sum"))) {
    throw ConfigError("operator.kind: \"" + k + "\" does not fit task \"" + t + "\"");
  }
  if ((t == "duathlon") != (c.dataset.kind == "duathlon-prior")) {
    throw ConfigError("dataset.kind: \"" + c.dataset.kind + "\" does not fit task \"" + t + "\"");
  }
  if (c.dataset.kind == "synthetic-phantoms" && c.dataset.side != c.op.side) {
    throw ConfigError("operator.side: " + std::to_string(c.op.side) + " differs from dataset.side " +
                      std::to_string(c.dataset.side));
  }
  const std::size_t domain = k == "sum" ? 2 : c.op.side * c.op.side;
  if (shape_numel(c.model.input_shape) != domain) {
    throw ConfigError("model.input_shape: " + to_string(c.model.input_shape) + " does not match the operator domain");
  }
  c.train.validate();
  c.inference.validate();
}

inline ExperimentConfig experiment_config_from_json(const Json& j) {
  io::ObjectReader r(j, "");
  ExperimentConfig c;
  r.require("task", c.task);
  if (c.task == "duathlon") {
    c = ExperimentConfig::duathlon();
  } else if (c.task == "deblur" || c.task == "tomo") {
    const std::string task = c.task;
    c = ExperimentConfig::desk_deblur();
    c.task = task;
  } else {
    throw ConfigError("task: expected deblur, tomo or duathlon, got \"" + c.task + "\"");
  }
  c.dataset = dataset_config_from_json(r.sub("dataset"));
  c.op = operator_config_from_json(r.sub("operator"));
  if (c.task == "duathlon") {
    c.model = nn::ModelConfig::toy_mlp(true);
  } else {
    c.model = nn::ModelConfig::unet_for(1, c.op.side, true);
  }
  if (r.has("model")) c.model = io::model_config_from_json(r.sub("model"), "model", c.model);
  if (r.has("train")) c.train = io::train_config_from_json(r.sub("train"), "train", c.train);
  if (r.has("inference")) c.inference = io::inference_config_from_json(r.sub("inference"), "inference", c.inference);
  r.get("output_dir", c.output_dir);
  r.finish();
  validate(c);
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  Json j;
  try {
    j = Json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return experiment_config_from_json(j);
}

}  // namespace dawnfm::experiments
