#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "dawnfm/nn/parameters.hpp"
#include "dawnfm/train/config.hpp"

namespace dawnfm::train {

/// lr(e) = lr_min + (lr_init - lr_min) (1 + cos(pi e / max_epochs)) / 2
inline double cosine_lr(const TrainConfig& cfg, std::size_t epoch) {
  const double frac = static_cast<double>(std::min(epoch, cfg.max_epochs)) / static_cast<double>(cfg.max_epochs);
  return cfg.lr_min + 0.5 * (cfg.lr_init - cfg.lr_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

/// First and second moment estimates, one pair per parameter.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::size_t step = 0;

  static AdamState for_params(const nn::ParameterSet& params) {
    AdamState s;
    for (const auto& p : params) {
      s.m.emplace_back(p.value.shape());
      s.v.emplace_back(p.value.shape());
    }
    return s;
  }
};

/// One bias-corrected Adam update using the gradients held in `params`.
inline void adam_step(nn::ParameterSet& params, AdamState& state, const TrainConfig& cfg, double lr) {
  if (state.m.size() != params.size()) throw StateError("adam state does not match the parameter set");
  ++state.step;
  const double k = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, k);
  const double c2 = 1.0 - std::pow(cfg.beta2, k);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p.value[j] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
}

}  // namespace dawnfm::train
