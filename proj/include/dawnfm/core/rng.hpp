#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "dawnfm/core/tensor.hpp"

namespace dawnfm {

/// Deterministic random stream.
///
/// Streams are identified by (seed, stream id); the engine is seeded through
/// std::seed_seq, whose mixing algorithm is fixed by the standard, so a given
/// pair produces the same sequence on every conforming platform. Normal draws
/// use Box-Muller on 53-bit uniforms rather than std::normal_distribution,
/// whose algorithm is implementation defined.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed, std::uint64_t stream_id = 0) : seed_(seed), stream_(stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
                      0x44574e46u};
    engine_.seed(seq);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }

  /// Child stream keyed by the master seed; independent of this stream's position.
  SeededRng stream(std::uint64_t id) const { return SeededRng(seed_, stream_ * 0x9E3779B97F4A7C15ULL + id + 1); }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n).
  std::size_t index(std::size_t n) {
    if (n == 0) throw ParameterError("index: empty range");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return static_cast<std::size_t>(r % n);
  }

  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::string state() const {
    std::ostringstream os;
    os << seed_ << ' ' << stream_ << ' ' << engine_;
    return os.str();
  }

  static SeededRng from_state(const std::string& text) {
    std::istringstream is(text);
    std::uint64_t seed = 0, stream = 0;
    is >> seed >> stream;
    SeededRng rng(seed, stream);
    is >> rng.engine_;
    if (is.fail()) throw ParseError("malformed rng state");
    return rng;
  }

  friend bool operator==(const SeededRng& a, const SeededRng& b) {
    return a.seed_ == b.seed_ && a.stream_ == b.stream_ && a.engine_ == b.engine_;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

inline Tensor sample_standard_normal(SeededRng& rng, const Shape& shape) {
  Tensor out(shape);
  for (auto& v : out.values()) v = rng.normal();
  return out;
}

}  // namespace dawnfm
