#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "dawnfm/core/rng.hpp"
#include "dawnfm/infer/rk4.hpp"
#include "dawnfm/ops/linear_operator.hpp"
#include "dawnfm/train/loss.hpp"

namespace dawnfm::infer {

struct InferenceConfig {
  std::size_t n_steps = 100;
  std::size_t ensemble_size = 32;
  std::uint64_t seed = 0;
  /// Noise percent of the observation; the model is conditioned on p / 100.
  double noise_percent = 0.0;

  friend bool operator==(const InferenceConfig&, const InferenceConfig&) = default;

  void validate() const {
    if (n_steps < 1) throw ConfigError("inference.n_steps: must be >= 1");
    if (ensemble_size < 1) throw ConfigError("inference.ensemble_size: must be >= 1");
    if (!(noise_percent >= 0.0 && noise_percent <= 20.0)) {
      throw ConfigError("inference.noise_percent: must lie in [0, 20]");
    }
  }
};

/// M posterior draws with their elementwise mean and standard deviation.
struct PosteriorEnsemble {
  Tensor samples;  // (M, ...)
  Tensor mean;
  /// Per-element standard deviation with the 1/M normalization.
  Tensor std;
  /// Mean squared distance of the samples from their mean, (1/M) sum |x_j - mean|^2.
  double spread = 0.0;
};

/// Two-pass mean and (1/M) standard deviation along the leading axis.
inline PosteriorEnsemble summarize(Tensor samples) {
  if (samples.ndim() < 1 || samples.empty()) throw ShapeError("summarize: no samples");
  const std::size_t m = samples.dim(0);
  const std::size_t d = samples.slice_size();
  PosteriorEnsemble e;
  e.mean = Tensor(samples.slice_shape());
  e.std = Tensor(samples.slice_shape());
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < d; ++k) e.mean[k] += samples[j * d + k];
  }
  for (auto& v : e.mean.values()) v /= static_cast<double>(m);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < d; ++k) {
      const double r = samples[j * d + k] - e.mean[k];
      e.std[k] += r * r;
    }
  }
  double total = 0.0;
  for (auto& v : e.std.values()) {
    total += v;
    v = std::sqrt(v / static_cast<double>(m));
  }
  e.spread = total / static_cast<double>(m);
  e.samples = std::move(samples);
  return e;
}

/// Integrates the batched field from every starting point in x0 (M, ...)
/// and summarizes the endpoints. All M trajectories advance together.
template <typename Field>
PosteriorEnsemble ensemble_from_field(Field&& field, Tensor x0, std::size_t n_steps) {
  return summarize(rk4_integrate(std::forward<Field>(field), std::move(x0), n_steps));
}

/// Samples the posterior for one observation b: M independent x0 ~ N(0, I),
/// each carried to t = 1 along s(x_t, E(A^T b), t, p/100).
///
/// `Model` follows the VelocityModel interface (forward, batch_shape, config).
template <typename Model>
PosteriorEnsemble posterior_ensemble(Model& model, const ops::LinearOperator& op, const Tensor& b,
                                     const InferenceConfig& cfg) {
  cfg.validate();
  require_shape(b, op.range_shape(), "posterior_ensemble observation");
  const std::size_t m = cfg.ensemble_size;
  const Shape batch = model.batch_shape(m);
  const Tensor bt_one = op.adjoint(b);
  Tensor bt(batch);
  const std::size_t d = bt.slice_size();
  if (bt_one.size() != d) throw ShapeError("posterior_ensemble: A^T b does not match the model input");
  for (std::size_t j = 0; j < m; ++j) std::copy_n(bt_one.data(), d, bt.data() + j * d);
  const std::vector<double> level(m, cfg.noise_percent / 100.0);
  const bool noise = model.config().noise_conditioning;

  SeededRng rng(cfg.seed);
  Tensor x0 = sample_standard_normal(rng, batch);
  std::vector<double> tv(m);
  auto field = [&](const Tensor& x, double t) {
    std::fill(tv.begin(), tv.end(), t);
    return noise ? model.forward(x, bt, tv, std::span<const double>(level), false)
                 : model.forward(x, bt, tv, std::nullopt, false);
  };
  return ensemble_from_field(field, std::move(x0), cfg.n_steps);
}

}  // namespace dawnfm::infer
