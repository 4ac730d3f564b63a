#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dawnfm/ops/linear_operator.hpp"

namespace dawnfm::train {

/// One prepared training batch of N samples. Tensors carry a leading batch
/// axis; x1/x0 slices match the model input shape, b slices the operator
/// range. `noise_level` is the value the model is conditioned on (p / 100).
struct TrainingBatch {
  Tensor x1;
  Tensor x0;
  std::vector<double> t;
  std::vector<double> noise_level;
  Tensor b;
};

struct LossBreakdown {
  double total = 0.0;
  double velocity_term = 0.0;
  double misfit_term = 0.0;
};

/// Reinterprets a batched tensor as `count` operator inputs and applies
/// A (or A^T) to each; returns a (count, ...) tensor in the target shape.
inline Tensor apply_each(const ops::LinearOperator& op, const Tensor& batch, bool adjoint,
                         const Shape& out_sample_shape) {
  const Shape in_shape = adjoint ? op.range_shape() : op.domain_shape();
  const std::size_t in_n = shape_numel(in_shape);
  const std::size_t out_n = shape_numel(out_sample_shape);
  if (batch.ndim() < 1 || batch.size() != batch.dim(0) * in_n) {
    throw ShapeError(op.name() + ": batch " + to_string(batch.shape()) + " does not hold inputs of shape " +
                     to_string(in_shape));
  }
  const std::size_t n = batch.dim(0);
  Shape shape{n};
  shape.insert(shape.end(), out_sample_shape.begin(), out_sample_shape.end());
  Tensor out(shape);
  for (std::size_t i = 0; i < n; ++i) {
    Tensor item(in_shape, std::vector<double>(batch.data() + i * in_n, batch.data() + (i + 1) * in_n));
    const Tensor r = adjoint ? op.adjoint(item) : op.apply(item);
    if (r.size() != out_n) throw ShapeError(op.name() + ": output size does not match the target shape");
    std::copy_n(r.data(), out_n, out.data() + i * out_n);
  }
  return out;
}

inline Shape sample_shape_of(const Tensor& batch) { return batch.slice_shape(); }

/// Misfit-augmented flow-matching loss and its parameter gradients.
///
///   L1 = mean over all entries of (v_hat - (x1 - x0))^2
///   b_theta = A x_t + (1 - t) A v_hat
///   L2 = mean over all data entries of (b_theta - b)^2
///   total = L1 + alpha * L2
///
/// Gradients accumulate into the model's parameters (the caller zeroes them).
/// The batch is fed through the model in chunks of `micro_batch` samples;
/// the result is the same loss, only the summation is split.
///
/// `Model` needs forward(x_t, bt, t, optional<sigma>, record) and
/// backward(upstream) plus config().noise_conditioning.
template <typename Model>
LossBreakdown compute_loss(Model& model, const ops::LinearOperator& op, const TrainingBatch& batch, double alpha,
                           std::size_t micro_batch = 8) {
  if (alpha < 0.0) throw ParameterError("alpha must be nonnegative");
  const std::size_t n = batch.x1.dim(0);
  require_same_shape(batch.x1, batch.x0, "compute_loss x1/x0");
  if (batch.t.size() != n || batch.noise_level.size() != n || batch.b.dim(0) != n) {
    throw ShapeError("compute_loss: per-sample fields disagree on batch size");
  }
  for (double t : batch.t) {
    if (!(t >= 0.0 && t <= 1.0)) throw ParameterError("compute_loss: t must lie in [0, 1]");
  }
  const Shape sample_shape = sample_shape_of(batch.x1);
  const std::size_t d = batch.x1.slice_size();
  const std::size_t m = batch.b.slice_size();
  const double inv_x = 1.0 / static_cast<double>(n * d);
  const double inv_b = 1.0 / static_cast<double>(n * m);
  const bool noise = model.config().noise_conditioning;
  if (micro_batch == 0) micro_batch = n;

  LossBreakdown loss;
  for (std::size_t start = 0; start < n; start += micro_batch) {
    const std::size_t count = std::min(micro_batch, n - start);
    Shape xs{count};
    xs.insert(xs.end(), sample_shape.begin(), sample_shape.end());
    Shape bs{count};
    bs.insert(bs.end(), batch.b.shape().begin() + 1, batch.b.shape().end());
    Tensor x_t(xs), target(xs), b(bs);
    const std::span<const double> t(batch.t.data() + start, count);
    const std::span<const double> level(batch.noise_level.data() + start, count);
    for (std::size_t i = 0; i < count; ++i) {
      const double ti = t[i];
      for (std::size_t k = 0; k < d; ++k) {
        const double a = batch.x0[(start + i) * d + k];
        const double c = batch.x1[(start + i) * d + k];
        x_t[i * d + k] = (1.0 - ti) * a + ti * c;
        target[i * d + k] = c - a;
      }
      std::copy_n(batch.b.data() + (start + i) * m, m, b.data() + i * m);
    }
    const Tensor bt = apply_each(op, b, true, sample_shape);
    const Tensor v_hat = noise ? model.forward(x_t, bt, t, level, true)
                               : model.forward(x_t, bt, t, std::nullopt, true);

    Tensor upstream(xs);
    for (std::size_t k = 0; k < v_hat.size(); ++k) {
      const double r = v_hat[k] - target[k];
      loss.velocity_term += r * r * inv_x;
      upstream[k] = 2.0 * r * inv_x;
    }
    // The misfit is always reported; it only feeds the gradient when alpha > 0.
    const Tensor ax = apply_each(op, x_t, false, op.range_shape());
    const Tensor av = apply_each(op, v_hat, false, op.range_shape());
    Tensor resid(ax.shape());
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t k = 0; k < m; ++k) {
        const std::size_t j = i * m + k;
        const double r = ax[j] + (1.0 - t[i]) * av[j] - b[j];
        loss.misfit_term += r * r * inv_b;
        resid[j] = 2.0 * alpha * (1.0 - t[i]) * r * inv_b;
      }
    }
    if (alpha > 0.0) axpy(1.0, apply_each(op, resid, true, sample_shape), upstream);
    model.backward(upstream);
  }
  loss.total = loss.velocity_term + alpha * loss.misfit_term;
  if (!std::isfinite(loss.total)) {
    throw TrainingError("non-finite loss (velocity " + std::to_string(loss.velocity_term) + ", misfit " +
                        std::to_string(loss.misfit_term) + ")");
  }
  return loss;
}

}  // namespace dawnfm::train
