#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

#include "dawnfm/io/tensor_io.hpp"

namespace dawnfm::io {

/// Maps [0, 1] to 0..255, clamping first and rounding half up.
inline std::uint8_t to_byte(double v) {
  const double c = std::clamp(std::isnan(v) ? 0.0 : v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(c * 255.0 + 0.5));
}

/// Binary PGM (H, W) or PPM (3, H, W) with maxval 255.
inline Bytes encode_image(const Tensor& t) {
  bool color = false;
  if (t.ndim() == 3) {
    if (t.dim(0) != 3) throw ShapeError("write_image: color images need 3 channels, got " + std::to_string(t.dim(0)));
    color = true;
  } else if (t.ndim() != 2) {
    throw ShapeError("write_image: expected (H, W) or (3, H, W), got " + to_string(t.shape()));
  }
  const std::size_t h = t.dim(t.ndim() - 2);
  const std::size_t w = t.dim(t.ndim() - 1);
  const std::string header = std::string(color ? "P6" : "P5") + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  Bytes out(header.begin(), header.end());
  if (!color) {
    for (double v : t.values()) out.push_back(to_byte(v));
  } else {
    for (std::size_t p = 0; p < h * w; ++p) {
      for (std::size_t c = 0; c < 3; ++c) out.push_back(to_byte(t[c * h * w + p]));
    }
  }
  return out;
}

inline void write_image(const Tensor& t, const std::filesystem::path& path) { write_file(path, encode_image(t)); }

/// Rescales to [0, 1] by min and max; a constant tensor maps to zeros.
inline Tensor normalize_for_display(const Tensor& t) {
  const double lo = min_value(t);
  const double hi = max_value(t);
  Tensor out(t.shape());
  if (hi > lo) {
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = (t[i] - lo) / (hi - lo);
  }
  return out;
}

}  // namespace dawnfm::io
