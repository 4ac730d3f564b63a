#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dawnfm/core/rng.hpp"

namespace dawnfm::nn {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

/// Ordered collection of named learnable tensors, each with a gradient slot
/// of the same shape. Iteration order is insertion order.
class ParameterSet {
 public:
  std::size_t add(std::string name, const Shape& shape) {
    for (const auto& p : params_) {
      if (p.name == name) throw ConfigError("duplicate parameter name " + name);
    }
    params_.push_back({std::move(name), Tensor(shape), Tensor(shape)});
    return params_.size() - 1;
  }

  std::size_t size() const noexcept { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  const Parameter* find(std::string_view name) const {
    for (const auto& p : params_) {
      if (p.name == name) return &p;
    }
    return nullptr;
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) std::fill(p.grad.values().begin(), p.grad.values().end(), 0.0);
  }

 private:
  std::vector<Parameter> params_;
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Fan-in scaled uniform weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases
/// (names ending in ".bias") are zero. Each parameter draws from its own
/// stream keyed by its name, so models that share parameter names share
/// their initial values.
inline void initialize(ParameterSet& params, std::uint64_t seed) {
  const SeededRng master(seed);
  for (auto& p : params) {
    auto& v = p.value;
    const bool is_bias = p.name.size() >= 5 && p.name.compare(p.name.size() - 5, 5, ".bias") == 0;
    if (is_bias) {
      std::fill(v.values().begin(), v.values().end(), 0.0);
      continue;
    }
    const std::size_t fan_in = v.size() / v.dim(0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    SeededRng rng = master.stream(fnv1a64(p.name));
    for (auto& x : v.values()) x = rng.uniform(-bound, bound);
  }
}

}  // namespace dawnfm::nn
