#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "dawnfm/io/config_json.hpp"
#include "dawnfm/io/tensor_io.hpp"
#include "dawnfm/nn/model.hpp"
#include "dawnfm/train/optimizer.hpp"

namespace dawnfm::train {

inline constexpr const char* kCheckpointFormat = "dawnfm-checkpoint";
inline constexpr int kCheckpointVersion = 1;

/// Everything needed to continue training bit-for-bit.
struct TrainerState {
  std::unique_ptr<nn::VelocityModel> model;
  AdamState adam;
  /// Number of completed epochs.
  std::size_t epoch = 0;
  SeededRng rng{0};
  /// Dataset-level clean-data range when the noise reference is `dataset`.
  std::optional<double> reference_range;
  /// One row per completed epoch: lr, total, velocity_term, misfit_term.
  std::vector<std::array<double, 4>> history;
};

struct Checkpoint {
  TrainerState state;
  TrainConfig train;
  /// Free-form context stored alongside (operator and dataset settings).
  io::Json context;
};

namespace detail {

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::uint64_t checksum(const io::Bytes& bytes) {
  return nn::fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

inline std::string numbered(const char* prefix, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04zu.dwnt", prefix, i);
  return buf;
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& dir, const TrainerState& state, const TrainConfig& train,
                            const io::Json& context = io::Json::object()) {
  if (!state.model) throw StateError("save_checkpoint: no model");
  std::filesystem::create_directories(dir);
  const auto& params = state.model->params();
  if (state.adam.m.size() != params.size() || state.adam.v.size() != params.size()) {
    throw StateError("save_checkpoint: optimizer state does not match the parameters");
  }
  io::Json entries = io::Json::array();
  auto put = [&](const std::string& name, const std::string& file, const Tensor& t) {
    const io::Bytes bytes = io::encode_tensor(t);
    io::write_file(dir / file, bytes);
    entries.push_back({{"name", name}, {"file", file}, {"shape", t.shape()}, {"checksum", detail::hex64(detail::checksum(bytes))}});
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    put("param/" + params[i].name, detail::numbered("param", i), params[i].value);
    put("adam_m/" + params[i].name, detail::numbered("adam_m", i), state.adam.m[i]);
    put("adam_v/" + params[i].name, detail::numbered("adam_v", i), state.adam.v[i]);
  }
  if (!state.history.empty()) {
    Tensor h({state.history.size(), 4});
    for (std::size_t e = 0; e < state.history.size(); ++e) {
      for (std::size_t k = 0; k < 4; ++k) h[e * 4 + k] = state.history[e][k];
    }
    put("history", "history.dwnt", h);
  }

  io::Json m;
  m["format"] = kCheckpointFormat;
  m["version"] = kCheckpointVersion;
  m["model"] = io::to_json(state.model->config());
  m["train"] = io::to_json(train);
  m["context"] = context;
  m["epoch"] = state.epoch;
  m["adam_step"] = state.adam.step;
  m["rng_state"] = state.rng.state();
  m["reference_range"] = state.reference_range ? io::Json(*state.reference_range) : io::Json(nullptr);
  m["tensors"] = entries;
  const std::string text = m.dump(2) + "\n";
  io::write_file(dir / "manifest.json", io::Bytes(text.begin(), text.end()));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) throw IoError("checkpoint: missing " + manifest_path.string());
  const io::Bytes raw = io::read_file(manifest_path);
  io::Json m;
  try {
    m = io::Json::parse(raw.begin(), raw.end());
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint manifest.json: " + std::string(e.what()));
  }
  io::ObjectReader r(m, "manifest");
  std::string format;
  int version = 0;
  r.require("format", format);
  r.require("version", version);
  if (format != kCheckpointFormat) throw IoError("checkpoint manifest.format: unexpected \"" + format + "\"");
  if (version != kCheckpointVersion) {
    throw IoError("checkpoint manifest.version: unsupported version " + std::to_string(version));
  }

  Checkpoint ck;
  const nn::ModelConfig model_cfg = io::model_config_from_json(r.sub("model"), "manifest.model");
  ck.train = io::train_config_from_json(r.sub("train"), "manifest.train");
  ck.context = m.contains("context") ? r.sub("context") : io::Json::object();
  r.require("epoch", ck.state.epoch);
  std::size_t adam_step = 0;
  r.require("adam_step", adam_step);
  std::string rng_state;
  r.require("rng_state", rng_state);
  ck.state.rng = SeededRng::from_state(rng_state);
  const io::Json& range = r.sub("reference_range");
  if (!range.is_null()) ck.state.reference_range = range.get<double>();
  const io::Json& tensors = r.sub("tensors");
  r.finish();
  if (!tensors.is_array()) throw IoError("checkpoint manifest.tensors: expected an array");

  std::map<std::string, Tensor> loaded;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    io::ObjectReader e(tensors[i], "manifest.tensors[" + std::to_string(i) + "]");
    std::string name, file, sum;
    Shape shape;
    e.require("name", name);
    e.require("file", file);
    e.require("shape", shape);
    e.require("checksum", sum);
    e.finish();
    const auto path = dir / file;
    if (file.find('/') != std::string::npos || !std::filesystem::exists(path)) {
      throw IoError("checkpoint entry " + name + ": missing tensor file " + file);
    }
    const io::Bytes bytes = io::read_file(path);
    if (detail::hex64(detail::checksum(bytes)) != sum) {
      throw IoError("checkpoint entry " + name + ": checksum mismatch in " + file);
    }
    Tensor t;
    try {
      t = io::decode_tensor<double>(bytes, file);
    } catch (const IoError& err) {
      throw IoError("checkpoint entry " + name + ": " + err.what());
    }
    if (t.shape() != shape) {
      throw IoError("checkpoint entry " + name + ": file shape " + dawnfm::to_string(t.shape()) +
                    " disagrees with manifest shape " + dawnfm::to_string(shape));
    }
    if (!loaded.emplace(name, std::move(t)).second) throw IoError("checkpoint entry " + name + ": listed twice");
  }

  ck.state.model = nn::make_model(model_cfg, 0);
  auto& params = ck.state.model->params();
  ck.state.adam = AdamState::for_params(params);
  auto take = [&](const std::string& name, Tensor& dst) {
    auto it = loaded.find(name);
    if (it == loaded.end()) throw IoError("checkpoint entry " + name + ": not listed in the manifest");
    if (it->second.shape() != dst.shape()) {
      throw IoError("checkpoint entry " + name + ": shape " + dawnfm::to_string(it->second.shape()) + " but the model expects " +
                    dawnfm::to_string(dst.shape()));
    }
    dst = std::move(it->second);
    loaded.erase(it);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    take("param/" + params[i].name, params[i].value);
    take("adam_m/" + params[i].name, ck.state.adam.m[i]);
    take("adam_v/" + params[i].name, ck.state.adam.v[i]);
  }
  ck.state.adam.step = adam_step;
  if (auto it = loaded.find("history"); it != loaded.end()) {
    const Tensor& h = it->second;
    if (h.ndim() != 2 || h.dim(1) != 4) throw IoError("checkpoint entry history: expected shape (epochs, 4)");
    for (std::size_t e = 0; e < h.dim(0); ++e) {
      ck.state.history.push_back({h[e * 4], h[e * 4 + 1], h[e * 4 + 2], h[e * 4 + 3]});
    }
    loaded.erase(it);
  }
  if (!loaded.empty()) throw IoError("checkpoint entry " + loaded.begin()->first + ": not a parameter of the model");
  if (ck.state.history.size() != ck.state.epoch && !ck.state.history.empty()) {
    throw IoError("checkpoint entry history: " + std::to_string(ck.state.history.size()) + " rows for epoch " +
                  std::to_string(ck.state.epoch));
  }
  return ck;
}

}  // namespace dawnfm::train
