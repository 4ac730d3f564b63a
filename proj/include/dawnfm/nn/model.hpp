#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dawnfm/nn/embedding.hpp"

namespace dawnfm::nn {

enum class ModelVariant { mlp, unet };

inline std::string to_string(ModelVariant v) { return v == ModelVariant::mlp ? "mlp" : "unet"; }

struct ModelConfig {
  ModelVariant variant = ModelVariant::unet;
  /// (C, H, W) for the unet, (D) for the mlp.
  Shape input_shape{1, 28, 28};
  /// unet channel widths; the first entry is the image channel count.
  std::vector<std::size_t> widths{1, 16, 32};
  std::size_t embed_dim = 256;
  bool noise_conditioning = true;
  std::vector<std::size_t> mlp_hidden{64, 64, 64};
  /// Multipliers applied before the sinusoidal basis. t lies in [0, 1] and
  /// the noise value (p/100) in [0, 0.2].
  double time_scale = 1000.0;
  double noise_scale = 5000.0;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;

  /// Config matching the conventions used for images of the given shape.
  static ModelConfig unet_for(std::size_t channels, std::size_t side, bool noise) {
    ModelConfig c;
    c.variant = ModelVariant::unet;
    c.input_shape = {channels, side, side};
    c.widths = side <= 32 ? std::vector<std::size_t>{channels, 16, 32}
                          : std::vector<std::size_t>{channels, 16, 32, 64, 128};
    c.noise_conditioning = noise;
    return c;
  }

  static ModelConfig toy_mlp(bool noise) {
    ModelConfig c;
    c.variant = ModelVariant::mlp;
    c.input_shape = {2};
    c.widths = {};
    c.embed_dim = 32;
    c.noise_conditioning = noise;
    c.mlp_hidden = {64, 64, 64};
    return c;
  }
};

/// Conditional velocity estimator s(x_t, E(A^T b), t, sigma).
///
/// forward() records a computation on an internal tape; backward() consumes
/// it, accumulating parameter gradients and returning dL/dx_t. Inputs are
/// batched along a leading axis.
class VelocityModel {
 public:
  explicit VelocityModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.embed_dim == 0) throw ConfigError("embed_dim must be positive");
  }
  virtual ~VelocityModel() = default;

  const ModelConfig& config() const { return cfg_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  Shape batch_shape(std::size_t n) const {
    Shape s{n};
    s.insert(s.end(), cfg_.input_shape.begin(), cfg_.input_shape.end());
    return s;
  }

  /// Predicted velocity for a batch. `sigma` must be given exactly when the
  /// model is noise conditioned. With record = false nothing is kept for
  /// backward.
  Tensor forward(const Tensor& x_t, const Tensor& bt, std::span<const double> t,
                 std::optional<std::span<const double>> sigma, bool record = true) {
    if (sigma.has_value() != cfg_.noise_conditioning) {
      throw ConfigError(cfg_.noise_conditioning ? "noise-informed model requires sigma"
                                                : "sigma supplied to a noise-blind model");
    }
    if (x_t.ndim() < 1) throw ShapeError("forward: empty input");
    const std::size_t n = x_t.dim(0);
    require_shape(x_t, batch_shape(n), "model forward x_t");
    require_shape(bt, batch_shape(n), "model forward A^T b");
    if (t.size() != n || (sigma && sigma->size() != n)) throw ShapeError("forward: conditioning size mismatch");
    tape_ = std::make_unique<Tape>(params_, record);
    batch_ = n;
    x_var_ = tape_->input(activation_dims(n), to_channel_major(x_t), true);
    const auto b_var = tape_->input(activation_dims(n), to_channel_major(bt), false);
    out_var_ = build(*tape_, x_var_, b_var, t, sigma);
    Tensor out = from_channel_major(tape_->value(out_var_), n);
    if (!out.all_finite()) throw TrainingError("non-finite value in model forward pass");
    if (!record) tape_.reset();
    return out;
  }

  /// Propagates dL/dv_hat; returns dL/dx_t. Parameter gradients accumulate.
  Tensor backward(const Tensor& upstream) {
    if (!tape_ || !tape_->recording()) throw StateError("model backward without a recorded forward pass");
    require_shape(upstream, batch_shape(batch_), "model backward upstream");
    tape_->backward(out_var_, to_channel_major(upstream));
    const auto& g = tape_->grad(x_var_);
    if (g.empty()) return Tensor(batch_shape(batch_));
    return from_channel_major(g, batch_);
  }

  /// Data embedding E(A^T b) for a batch, returned in (N, C', ...) layout.
  Tensor encode_data(const Tensor& bt) {
    if (bt.ndim() < 1) throw ShapeError("encode_data: empty input");
    const std::size_t n = bt.dim(0);
    require_shape(bt, batch_shape(n), "encode_data");
    Tape tape(params_, false);
    const auto b_var = tape.input(activation_dims(n), to_channel_major(bt), false);
    const auto e = encode(tape, b_var);
    const Dims d = tape.dims(e);
    Shape shape{n, d.c};
    if (d.hw() > 1) {
      shape.push_back(d.h);
      shape.push_back(d.w);
    }
    Tensor out(shape);
    for (std::size_t c = 0; c < d.c; ++c) {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < d.hw(); ++i) out[(j * d.c + c) * d.hw() + i] = tape.value(e)[(c * n + j) * d.hw() + i];
      }
    }
    return out;
  }

  /// Time embedding of a single value (embed_dim entries).
  Tensor embed_time(double t) { return embed_single(time_emb_, t); }
  /// Noise embedding of a single value; the model must be noise conditioned.
  Tensor embed_noise(double s) {
    if (!cfg_.noise_conditioning) throw ConfigError("noise-blind model has no noise embedding");
    return embed_single(noise_emb_, s);
  }

  /// Names of the parameters read by the data encoder.
  virtual std::vector<std::string> encoder_parameter_names() const {
    return {"encoder.weight", "encoder.bias"};
  }

 protected:
  virtual Dims activation_dims(std::size_t n) const = 0;
  virtual Tape::Var encode(Tape& tape, Tape::Var bt) const = 0;
  virtual Tape::Var build(Tape& tape, Tape::Var x, Tape::Var bt, std::span<const double> t,
                          std::optional<std::span<const double>> sigma) const = 0;

  void declare_embeddings() {
    time_emb_ = ScalarEmbedding::declare(params_, "time_embed", cfg_.embed_dim, cfg_.time_scale);
    if (cfg_.noise_conditioning) {
      noise_emb_ = ScalarEmbedding::declare(params_, "noise_embed", cfg_.embed_dim, cfg_.noise_scale);
    }
  }

  // NCHW (or N x D) <-> channel-major [C][N][HW]
  std::vector<double> to_channel_major(const Tensor& x) const {
    const Dims d = activation_dims(x.dim(0));
    std::vector<double> out(d.numel());
    const std::size_t hw = d.hw();
    for (std::size_t j = 0; j < d.n; ++j) {
      for (std::size_t c = 0; c < d.c; ++c) {
        std::copy_n(x.data() + (j * d.c + c) * hw, hw, out.data() + (c * d.n + j) * hw);
      }
    }
    return out;
  }

  Tensor from_channel_major(const Buffer& v, std::size_t n) const {
    const Dims d = activation_dims(n);
    Tensor out(batch_shape(n));
    const std::size_t hw = d.hw();
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t c = 0; c < d.c; ++c) {
        std::copy_n(v.data() + (c * n + j) * hw, hw, out.data() + (j * d.c + c) * hw);
      }
    }
    return out;
  }

  ModelConfig cfg_;
  ParameterSet params_;
  ScalarEmbedding time_emb_;
  ScalarEmbedding noise_emb_;

 private:
  Tensor embed_single(const ScalarEmbedding& emb, double v) {
    Tape tape(params_, false);
    const double vals[1] = {v};
    const auto e = emb.forward(tape, vals);
    const auto& out = tape.value(e);
    return Tensor({emb.dim}, std::vector<double>(out.begin(), out.end()));
  }

  std::unique_ptr<Tape> tape_;
  std::size_t batch_ = 0;
  Tape::Var x_var_ = 0;
  Tape::Var out_var_ = 0;
};

/// Dense network on [x_t, E(A^T b), embed(t), embed(sigma)] for vector
/// unknowns. The data encoder is one affine map D -> D.
class MlpVelocityModel final : public VelocityModel {
 public:
  explicit MlpVelocityModel(ModelConfig cfg) : VelocityModel(std::move(cfg)) {
    if (cfg_.input_shape.size() != 1) throw ConfigError("mlp model expects a 1-D input shape");
    if (cfg_.mlp_hidden.empty()) throw ConfigError("mlp model needs at least one hidden layer");
    const std::size_t d = cfg_.input_shape[0];
    enc_w_ = params_.add("encoder.weight", {d, d});
    enc_b_ = params_.add("encoder.bias", {d});
    declare_embeddings();
    std::size_t in = 2 * d + cfg_.embed_dim * (cfg_.noise_conditioning ? 2 : 1);
    for (std::size_t i = 0; i < cfg_.mlp_hidden.size(); ++i) {
      const std::string p = "mlp" + std::to_string(i);
      hidden_.push_back({params_.add(p + ".weight", {cfg_.mlp_hidden[i], in}), params_.add(p + ".bias", {cfg_.mlp_hidden[i]})});
      in = cfg_.mlp_hidden[i];
    }
    out_w_ = params_.add("out.weight", {d, in});
    out_b_ = params_.add("out.bias", {d});
  }

 protected:
  Dims activation_dims(std::size_t n) const override { return Dims{cfg_.input_shape[0], n, 1, 1}; }

  Tape::Var encode(Tape& tape, Tape::Var bt) const override { return tape.linear(bt, enc_w_, enc_b_); }

  Tape::Var build(Tape& tape, Tape::Var x, Tape::Var bt, std::span<const double> t,
                  std::optional<std::span<const double>> sigma) const override {
    auto h = tape.concat(x, encode(tape, bt));
    h = tape.concat(h, time_emb_.forward(tape, t));
    if (sigma) h = tape.concat(h, noise_emb_.forward(tape, *sigma));
    for (const auto& [w, b] : hidden_) h = tape.silu(tape.linear(h, w, b));
    return tape.linear(h, out_w_, out_b_);
  }

 private:
  std::size_t enc_w_ = 0, enc_b_ = 0, out_w_ = 0, out_b_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> hidden_;
};

/// UNet over C x H x W images.
///
/// Each level holds a residual block: conv3x3(silu(h)) plus the projected
/// time/noise embeddings (per-channel biases) plus the projected data
/// embedding (a 1x1 convolution of the encoder output average-pooled to the
/// level resolution), then conv3x3(silu(.)) added back to h. Levels are joined
/// by 2x average pooling + conv3x3 on the way down and nearest upsampling +
/// conv3x3 on the way up; skips are concatenated and merged by a 1x1 conv.
class UNetVelocityModel final : public VelocityModel {
 public:
  explicit UNetVelocityModel(ModelConfig cfg) : VelocityModel(std::move(cfg)) {
    const auto& w = cfg_.widths;
    if (cfg_.input_shape.size() != 3) throw ConfigError("unet expects input shape (C, H, W)");
    if (w.size() < 2) throw ConfigError("unet needs at least one feature level");
    if (w[0] != cfg_.input_shape[0]) throw ConfigError("unet widths[0] must equal the channel count");
    for (auto c : w) {
      if (c == 0) throw ConfigError("unet widths must be positive");
    }
    const std::size_t levels = w.size() - 1;
    const std::size_t factor = std::size_t{1} << (levels - 1);
    if (cfg_.input_shape[1] % factor || cfg_.input_shape[2] % factor) {
      throw ConfigError("unet spatial extents must be divisible by " + std::to_string(factor));
    }
    const std::size_t c = w[0];
    enc_ = conv_param("encoder", w[1], c, 3);
    declare_embeddings();
    in_ = conv_param("in", w[1], c, 3);
    for (std::size_t l = 1; l <= levels; ++l) {
      Level lv;
      if (l > 1) lv.down = conv_param("down" + std::to_string(l), w[l], w[l - 1], 3);
      lv.enc_block = block("enc" + std::to_string(l), w[l]);
      levels_.push_back(lv);
    }
    for (std::size_t l = levels - 1; l >= 1; --l) {
      auto& lv = levels_[l - 1];
      lv.up = conv_param("up" + std::to_string(l), w[l], w[l + 1], 3);
      lv.merge = conv_param("merge" + std::to_string(l), w[l], 2 * w[l], 1);
      lv.dec_block = block("dec" + std::to_string(l), w[l]);
    }
    out_ = conv_param("out", c, w[1], 3);
  }

 protected:
  Dims activation_dims(std::size_t n) const override {
    return Dims{cfg_.input_shape[0], n, cfg_.input_shape[1], cfg_.input_shape[2]};
  }

  Tape::Var encode(Tape& tape, Tape::Var bt) const override { return tape.conv(bt, enc_.w, enc_.b, 3); }

  Tape::Var build(Tape& tape, Tape::Var x, Tape::Var bt, std::span<const double> t,
                  std::optional<std::span<const double>> sigma) const override {
    const std::size_t levels = levels_.size();
    std::vector<Tape::Var> data(levels);
    data[0] = encode(tape, bt);
    for (std::size_t l = 1; l < levels; ++l) data[l] = tape.avgpool2(data[l - 1]);
    const auto et = time_emb_.forward(tape, t);
    std::optional<Tape::Var> es;
    if (sigma) es = noise_emb_.forward(tape, *sigma);

    auto h = tape.conv(x, in_.w, in_.b, 3);
    std::vector<Tape::Var> skips(levels);
    for (std::size_t l = 0; l < levels; ++l) {
      if (l > 0) h = tape.conv(tape.avgpool2(h), levels_[l].down.w, levels_[l].down.b, 3);
      h = residual(tape, h, levels_[l].enc_block, et, es, data[l]);
      skips[l] = h;
    }
    for (std::size_t l = levels - 1; l-- > 0;) {
      const auto& lv = levels_[l];
      auto u = tape.conv(tape.upsample2(h), lv.up.w, lv.up.b, 3);
      h = tape.conv(tape.concat(u, skips[l]), lv.merge.w, lv.merge.b, 1);
      h = residual(tape, h, lv.dec_block, et, es, data[l]);
    }
    return tape.conv(tape.silu(h), out_.w, out_.b, 3);
  }

 private:
  struct ConvParam {
    std::size_t w = 0, b = 0;
  };
  struct Block {
    ConvParam conv1, conv2, time, noise, data;
  };
  struct Level {
    ConvParam down, up, merge;
    Block enc_block, dec_block;
  };

  ConvParam conv_param(const std::string& name, std::size_t cout, std::size_t cin, std::size_t k) {
    const Shape ws = k == 1 ? Shape{cout, cin} : Shape{cout, cin, k, k};
    return {params_.add(name + ".weight", ws), params_.add(name + ".bias", {cout})};
  }

  Block block(const std::string& name, std::size_t ch) {
    Block b;
    b.conv1 = conv_param(name + ".conv1", ch, ch, 3);
    b.conv2 = conv_param(name + ".conv2", ch, ch, 3);
    b.time = conv_param(name + ".time", ch, cfg_.embed_dim, 1);
    if (cfg_.noise_conditioning) b.noise = conv_param(name + ".noise", ch, cfg_.embed_dim, 1);
    b.data = conv_param(name + ".data", ch, cfg_.widths[1], 1);
    return b;
  }

  Tape::Var residual(Tape& tape, Tape::Var h, const Block& b, Tape::Var et, std::optional<Tape::Var> es,
                     Tape::Var data) const {
    auto r = tape.conv(tape.silu(h), b.conv1.w, b.conv1.b, 3);
    r = tape.add_channel_bias(r, tape.linear(et, b.time.w, b.time.b));
    if (es) r = tape.add_channel_bias(r, tape.linear(*es, b.noise.w, b.noise.b));
    r = tape.add(r, tape.conv(data, b.data.w, b.data.b, 1));
    r = tape.conv(tape.silu(r), b.conv2.w, b.conv2.b, 3);
    return tape.add(h, r);
  }

  ConvParam enc_, in_, out_;
  std::vector<Level> levels_;
};

/// Builds the variant named in the config and initializes its parameters.
inline std::unique_ptr<VelocityModel> make_model(const ModelConfig& cfg, std::uint64_t init_seed) {
  std::unique_ptr<VelocityModel> m;
  if (cfg.variant == ModelVariant::mlp) {
    m = std::make_unique<MlpVelocityModel>(cfg);
  } else {
    m = std::make_unique<UNetVelocityModel>(cfg);
  }
  initialize(m->params(), init_seed);
  return m;
}

/// Single-value time embedding (embed_dim entries).
inline Tensor embed_scalar(double value, VelocityModel& model) { return model.embed_time(value); }

}  // namespace dawnfm::nn
