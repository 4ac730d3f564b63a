#pragma once

#include <cstdint>
#include <string>

#include "dawnfm/core/error.hpp"

namespace dawnfm::train {

/// How the noise standard deviation is tied to the data range.
enum class NoiseReference {
  /// sigma = p% of max - min of each sample's clean data.
  per_sample,
  /// sigma = p% of max - min over the clean data of the whole training set;
  /// used when each observation has too few entries to have a range.
  dataset,
};

inline std::string to_string(NoiseReference r) { return r == NoiseReference::per_sample ? "sample" : "dataset"; }

struct TrainConfig {
  double alpha = 1.0;
  double lr_init = 1e-4;
  double lr_min = 1e-6;
  std::size_t max_epochs = 200;
  std::size_t batch_size = 64;
  double p_low = 0.0;
  double p_high = 20.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  /// Samples per forward/backward chunk inside a batch; changes only speed
  /// and floating-point summation order.
  std::size_t micro_batch = 8;
  NoiseReference noise_reference = NoiseReference::per_sample;
  /// Write a checkpoint every this many epochs (0: only the final one).
  std::size_t checkpoint_every = 0;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;

  void validate() const {
    if (alpha < 0.0) throw ConfigError("train.alpha: must be >= 0");
    if (!(0.0 <= p_low && p_low < p_high && p_high <= 20.0)) {
      throw ConfigError("train.p_low/p_high: need 0 <= p_low < p_high <= 20");
    }
    if (!(lr_min <= lr_init) || lr_min < 0.0) throw ConfigError("train.lr_min: need 0 <= lr_min <= lr_init");
    if (max_epochs == 0) throw ConfigError("train.max_epochs: must be >= 1");
    if (batch_size == 0) throw ConfigError("train.batch_size: must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw ConfigError("train.beta1/beta2: must lie in [0, 1)");
    }
    if (!(adam_eps > 0.0)) throw ConfigError("train.adam_eps: must be > 0");
  }
};

}  // namespace dawnfm::train
