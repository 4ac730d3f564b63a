#pragma once

#include <algorithm>
#include <functional>
#include <numeric>

#include "dawnfm/flow/interpolant.hpp"
#include "dawnfm/train/checkpoint.hpp"
#include "dawnfm/train/loss.hpp"

namespace dawnfm::train {

struct EpochReport {
  std::size_t epoch = 0;
  double lr = 0.0;
  std::size_t steps = 0;
  /// Mean over the epoch's batches.
  LossBreakdown loss;
};

/// Clean-data range max(A x) - min(A x) over the whole dataset.
inline double dataset_data_range(const ops::LinearOperator& op, const Tensor& dataset) {
  const Tensor clean = apply_each(op, dataset, false, op.range_shape());
  return max_value(clean) - min_value(clean);
}

/// Fresh state: model initialized from cfg.seed, Adam moments at zero.
inline TrainerState init_state(const nn::ModelConfig& model_cfg, const TrainConfig& cfg, const ops::LinearOperator& op,
                               const Tensor& dataset) {
  cfg.validate();
  TrainerState s;
  s.model = nn::make_model(model_cfg, cfg.seed);
  s.adam = AdamState::for_params(s.model->params());
  s.rng = SeededRng(cfg.seed).stream(2);
  if (cfg.noise_reference == NoiseReference::dataset) s.reference_range = dataset_data_range(op, dataset);
  return s;
}

/// One pass over the shuffled dataset. Per batch: x1 drawn in shuffled
/// order, antithetic x0 = [z; -z], one (t, p, noise) draw per pair shared by
/// both members, compute_loss, then an Adam step at lr(epoch).
inline EpochReport train_epoch(TrainerState& state, const Tensor& dataset, const ops::LinearOperator& op,
                               const TrainConfig& cfg,
                               const std::function<void(const LossBreakdown&)>& on_step = {}) {
  if (!state.model) throw StateError("train_epoch: no model");
  if (dataset.ndim() < 1 || dataset.empty()) throw ParameterError("train_epoch: empty dataset");
  auto& model = *state.model;
  const std::size_t n = dataset.dim(0);
  const std::size_t d = dataset.slice_size();
  const Shape one = model.batch_shape(1);
  if (shape_numel(one) != d) {
    throw ShapeError("train_epoch: dataset samples " + dawnfm::to_string(dataset.slice_shape()) +
                     " do not match the model input " + dawnfm::to_string(model.config().input_shape));
  }
  const std::size_t m = shape_numel(op.range_shape());
  auto& rng = state.rng;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

  EpochReport report;
  report.epoch = state.epoch;
  report.lr = cosine_lr(cfg, state.epoch);
  for (std::size_t start = 0; start < n; start += cfg.batch_size) {
    const std::size_t k = std::min(cfg.batch_size, n - start);
    TrainingBatch batch;
    batch.x1 = Tensor(model.batch_shape(2 * k));
    batch.x0 = Tensor(model.batch_shape(2 * k));
    Shape bs{2 * k};
    for (auto e : op.range_shape()) bs.push_back(e);
    batch.b = Tensor(bs);
    batch.t.resize(2 * k);
    batch.noise_level.resize(2 * k);

    for (std::size_t i = 0; i < k; ++i) {
      const double* src = dataset.data() + order[start + i] * d;
      std::copy_n(src, d, batch.x1.data() + i * d);
      std::copy_n(src, d, batch.x1.data() + (k + i) * d);
    }
    for (std::size_t j = 0; j < k * d; ++j) {
      const double z = rng.normal();
      batch.x0[j] = z;
      batch.x0[k * d + j] = -z;
    }
    for (std::size_t i = 0; i < k; ++i) {
      const double t = rng.uniform();
      const double p = rng.uniform(cfg.p_low, cfg.p_high);
      Tensor x1(op.domain_shape(), std::vector<double>(batch.x1.data() + i * d, batch.x1.data() + (i + 1) * d));
      const auto obs = flow::inject_noise(op, x1, p, rng, state.reference_range);
      for (std::size_t h : {i, k + i}) {
        batch.t[h] = t;
        batch.noise_level[h] = p / 100.0;
        std::copy_n(obs.b.data(), m, batch.b.data() + h * m);
      }
    }

    model.params().zero_grad();
    const LossBreakdown loss = compute_loss(model, op, batch, cfg.alpha, cfg.micro_batch);
    adam_step(model.params(), state.adam, cfg, report.lr);
    if (on_step) on_step(loss);
    report.loss.total += loss.total;
    report.loss.velocity_term += loss.velocity_term;
    report.loss.misfit_term += loss.misfit_term;
    ++report.steps;
  }
  const double inv = 1.0 / static_cast<double>(report.steps);
  report.loss.total *= inv;
  report.loss.velocity_term *= inv;
  report.loss.misfit_term *= inv;
  state.history.push_back({report.lr, report.loss.total, report.loss.velocity_term, report.loss.misfit_term});
  ++state.epoch;
  return report;
}

/// Runs epochs until cfg.max_epochs, calling `on_epoch` after each one.
inline void train_until_done(TrainerState& state, const Tensor& dataset, const ops::LinearOperator& op,
                             const TrainConfig& cfg,
                             const std::function<void(const EpochReport&, const TrainerState&)>& on_epoch = {}) {
  while (state.epoch < cfg.max_epochs) {
    const EpochReport r = train_epoch(state, dataset, op, cfg);
    if (on_epoch) on_epoch(r, state);
  }
}

}  // namespace dawnfm::train
