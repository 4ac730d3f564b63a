#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "dawnfm/core/tensor.hpp"

namespace dawnfm {

using Complex = std::complex<double>;

/// Row-major complex H x W grid.
struct ComplexGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Complex> data;

  ComplexGrid() = default;
  ComplexGrid(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

  Complex& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  Complex at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  static ComplexGrid from_real(const Tensor& x) {
    if (x.ndim() != 2) throw ShapeError("fft2 expects a 2D tensor, got " + to_string(x.shape()));
    ComplexGrid g(x.dim(0), x.dim(1));
    for (std::size_t i = 0; i < x.size(); ++i) g.data[i] = Complex(x[i], 0.0);
    return g;
  }

  Tensor real_part() const {
    Tensor out({rows, cols});
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i].real();
    return out;
  }

  double max_abs_imag() const {
    double m = 0.0;
    for (const auto& v : data) m = std::max(m, std::abs(v.imag()));
    return m;
  }
};

enum class FftDirection { forward, inverse };

namespace detail {

// FFTW planning is not thread-safe; execution with new arrays is.
class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t rows, std::size_t cols, FftDirection dir) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(rows, cols, dir == FftDirection::forward);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<Complex> scratch(rows * cols);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf, buf,
                                      dir == FftDirection::forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

  ~FftPlanCache() {
    for (auto& [_, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::size_t, bool>, fftw_plan> plans_;
};

}  // namespace detail

/// 2D DFT. Forward is unscaled; inverse carries the 1/(H*W) factor, so
/// Parseval reads sum|x|^2 = sum|X|^2 / (H*W).
inline ComplexGrid fft2(ComplexGrid x, FftDirection dir) {
  if (x.rows == 0 || x.cols == 0) throw ShapeError("fft2: empty grid");
  fftw_plan plan = detail::FftPlanCache::instance().get(x.rows, x.cols, dir);
  auto* buf = reinterpret_cast<fftw_complex*>(x.data.data());
  fftw_execute_dft(plan, buf, buf);
  if (dir == FftDirection::inverse) {
    const double scale = 1.0 / static_cast<double>(x.rows * x.cols);
    for (auto& v : x.data) v *= scale;
  }
  return x;
}

inline ComplexGrid fft2(const Tensor& x, FftDirection dir = FftDirection::forward) {
  return fft2(ComplexGrid::from_real(x), dir);
}

}  // namespace dawnfm
