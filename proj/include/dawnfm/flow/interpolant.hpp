#pragma once

#include <optional>
#include <utility>

#include "dawnfm/core/rng.hpp"
#include "dawnfm/ops/linear_operator.hpp"

namespace dawnfm::flow {

/// Point on the straight path from x0 to x1 together with its velocity.
struct InterpolantSample {
  Tensor x0;
  Tensor x1;
  double t = 0.0;
  Tensor x_t;
  Tensor v;
};

inline void require_unit_time(double t, const char* what) {
  if (!(t >= 0.0 && t <= 1.0)) throw ParameterError(std::string(what) + ": t must lie in [0, 1]");
}

/// x_t = (1 - t) x0 + t x1, v = x1 - x0.
inline InterpolantSample interpolate(const Tensor& x0, const Tensor& x1, double t) {
  require_unit_time(t, "interpolate");
  require_same_shape(x0, x1, "interpolate");
  InterpolantSample s{x0, x1, t, Tensor(x0.shape()), Tensor(x0.shape())};
  for (std::size_t i = 0; i < x0.size(); ++i) {
    s.x_t[i] = (1.0 - t) * x0[i] + t * x1[i];
    s.v[i] = x1[i] - x0[i];
  }
  return s;
}

/// Endpoint estimate x_t + (1 - t) v_hat.
inline Tensor recover_x1(const Tensor& x_t, const Tensor& v_hat, double t) {
  require_unit_time(t, "recover_x1");
  require_same_shape(x_t, v_hat, "recover_x1");
  return combine(1.0, x_t, 1.0 - t, v_hat);
}

struct NoisyObservation {
  Tensor b;
  double sigma = 0.0;
  double percent = 0.0;
};

inline constexpr double kMaxNoisePercent = 20.0;

/// b = A x1 + sigma z with sigma = (p / 100) * range. The range is that of the
/// clean data A x1 unless `reference_range` supplies a dataset-level value
/// (needed when the data has a single element). A zero range gives sigma = 0.
inline NoisyObservation inject_noise(const ops::LinearOperator& op, const Tensor& x1, double percent,
                                     SeededRng& rng, std::optional<double> reference_range = std::nullopt) {
  if (!(percent >= 0.0 && percent <= kMaxNoisePercent)) {
    throw ParameterError("noise percent must lie in [0, 20]");
  }
  Tensor clean = op.apply(x1);
  const double range = reference_range ? *reference_range : max_value(clean) - min_value(clean);
  const double sigma = percent / 100.0 * range;
  NoisyObservation obs{std::move(clean), sigma, percent};
  if (sigma > 0.0) {
    for (auto& v : obs.b.values()) v += sigma * rng.normal();
  }
  return obs;
}

struct AntitheticPair {
  Tensor x1;
  Tensor x0;
};

/// Doubles a batch: x1 is repeated, x0 = [z; -z] for fresh standard normal z.
inline AntitheticPair antithetic_batch(const Tensor& x1_batch, SeededRng& rng) {
  if (x1_batch.ndim() < 1 || x1_batch.empty()) throw ShapeError("antithetic_batch: empty batch");
  const Tensor z = sample_standard_normal(rng, x1_batch.shape());
  return {concat_leading(x1_batch, x1_batch), concat_leading(z, -1.0 * z)};
}

}  // namespace dawnfm::flow
