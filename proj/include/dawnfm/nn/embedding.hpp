#pragma once

#include <cmath>
#include <span>
#include <string>

#include "dawnfm/nn/tape.hpp"

namespace dawnfm::nn {

/// Learnable embedding of a scalar: a fixed sinusoidal basis of the scaled
/// value, followed by Linear -> SiLU -> Linear (all embed_dim wide).
struct ScalarEmbedding {
  std::size_t dim = 0;
  double scale = 1.0;
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;

  static ScalarEmbedding declare(ParameterSet& params, const std::string& prefix, std::size_t dim, double scale) {
    if (dim == 0 || dim % 2) throw ConfigError("embedding dimension must be positive and even");
    ScalarEmbedding e;
    e.dim = dim;
    e.scale = scale;
    e.w1 = params.add(prefix + ".fc1.weight", {dim, dim});
    e.b1 = params.add(prefix + ".fc1.bias", {dim});
    e.w2 = params.add(prefix + ".fc2.weight", {dim, dim});
    e.b2 = params.add(prefix + ".fc2.bias", {dim});
    return e;
  }

  /// Sinusoidal features, dim x N: rows k < dim/2 hold sin(scale*v*f_k), the
  /// rest cos, with f_k = 10000^(-k/(dim/2)).
  std::vector<double> basis(std::span<const double> values) const {
    const std::size_t half = dim / 2;
    const std::size_t n = values.size();
    std::vector<double> out(dim * n);
    for (std::size_t k = 0; k < half; ++k) {
      const double f = std::exp(-std::log(10000.0) * static_cast<double>(k) / static_cast<double>(half));
      for (std::size_t j = 0; j < n; ++j) {
        const double arg = scale * values[j] * f;
        out[k * n + j] = std::sin(arg);
        out[(half + k) * n + j] = std::cos(arg);
      }
    }
    return out;
  }

  Tape::Var forward(Tape& tape, std::span<const double> values) const {
    for (double v : values) {
      if (!std::isfinite(v)) throw ParameterError("embedding input must be finite");
    }
    const auto in = tape.input(Dims{dim, values.size(), 1, 1}, basis(values), false);
    return tape.linear(tape.silu(tape.linear(in, w1, b1)), w2, b2);
  }
};

}  // namespace dawnfm::nn
