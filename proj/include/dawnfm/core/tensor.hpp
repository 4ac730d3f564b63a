#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "dawnfm/core/error.hpp"

namespace dawnfm {

using Shape = std::vector<std::size_t>;

inline std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  if (shape.size() == 1) os << ',';
  os << ')';
  return os.str();
}

inline std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline void require_valid_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("shape must have at least one extent");
  for (auto e : shape) {
    if (e == 0) throw ShapeError("zero extent in shape " + to_string(shape));
  }
}

/// Dense row-major N-dimensional array of real values.
///
/// The shape is carried explicitly so that every tensor can be serialized and
/// checked without side information. Values are stored contiguously; the last
/// extent varies fastest.
template <typename T>
class BasicTensor {
  static_assert(std::is_floating_point_v<T>);

 public:
  using value_type = T;

  BasicTensor() = default;

  explicit BasicTensor(Shape shape, T fill = T{0}) : shape_(std::move(shape)) {
    require_valid_shape(shape_);
    data_.assign(shape_numel(shape_), fill);
  }

  BasicTensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    require_valid_shape(shape_);
    if (data_.size() != shape_numel(shape_)) {
      throw ShapeError("tensor of shape " + to_string(shape_) + " needs " +
                       std::to_string(shape_numel(shape_)) + " values, got " +
                       std::to_string(data_.size()));
    }
  }

  static BasicTensor vector(std::initializer_list<T> values) {
    return BasicTensor({values.size()}, std::vector<T>(values));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t ndim() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const T> values() const noexcept { return data_; }
  std::span<T> values() noexcept { return data_; }
  const T* data() const noexcept { return data_.data(); }
  T* data() noexcept { return data_.data(); }
  const std::vector<T>& storage() const noexcept { return data_; }

  T operator[](std::size_t i) const { return data_[i]; }
  T& operator[](std::size_t i) { return data_[i]; }

  T at(std::size_t row, std::size_t col) const { return data_[row * shape_.back() + col]; }
  T& at(std::size_t row, std::size_t col) { return data_[row * shape_.back() + col]; }

  /// Same values under a new shape with the same element count.
  BasicTensor reshaped(Shape shape) const {
    return BasicTensor(std::move(shape), data_);
  }

  /// Number of elements in one slice along the leading axis.
  std::size_t slice_size() const { return shape_.size() <= 1 ? 1 : data_.size() / shape_[0]; }

  Shape slice_shape() const {
    if (shape_.size() <= 1) return Shape{1};
    return Shape(shape_.begin() + 1, shape_.end());
  }

  /// Copy of slice `i` along the leading axis.
  BasicTensor slice(std::size_t i) const {
    if (i >= shape_.at(0)) throw ShapeError("slice index out of range");
    const std::size_t n = slice_size();
    return BasicTensor(slice_shape(),
                       std::vector<T>(data_.begin() + static_cast<std::ptrdiff_t>(i * n),
                                      data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * n)));
  }

  void set_slice(std::size_t i, const BasicTensor& src) {
    const std::size_t n = slice_size();
    if (src.size() != n) throw ShapeError("slice size mismatch");
    std::copy(src.data_.begin(), src.data_.end(), data_.begin() + static_cast<std::ptrdiff_t>(i * n));
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  template <typename U>
  BasicTensor<U> cast() const {
    return BasicTensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<double>;
using TensorF = BasicTensor<float>;

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

inline void require_shape(const Tensor& a, const Shape& expected, const char* what) {
  if (a.shape() != expected) {
    throw ShapeError(std::string(what) + ": expected shape " + to_string(expected) + ", got " +
                     to_string(a.shape()));
  }
}

inline double dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw ShapeError("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(const Tensor& a) { return dot(a, a); }

/// out = alpha*a + beta*b
inline Tensor combine(double alpha, const Tensor& a, double beta, const Tensor& b) {
  require_same_shape(a, b, "combine");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = alpha * a[i] + beta * b[i];
  return out;
}

inline Tensor operator+(const Tensor& a, const Tensor& b) { return combine(1.0, a, 1.0, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return combine(1.0, a, -1.0, b); }

inline Tensor operator*(double s, const Tensor& a) {
  Tensor out = a;
  for (auto& v : out.values()) v *= s;
  return out;
}

/// y += alpha * x
inline void axpy(double alpha, const Tensor& x, Tensor& y) {
  if (x.size() != y.size()) throw ShapeError("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw ShapeError("max_abs_diff: size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_value(const Tensor& a) { return *std::max_element(a.values().begin(), a.values().end()); }
inline double min_value(const Tensor& a) { return *std::min_element(a.values().begin(), a.values().end()); }

inline double mean_value(const Tensor& a) {
  return std::accumulate(a.values().begin(), a.values().end(), 0.0) / static_cast<double>(a.size());
}

/// Stacks equally shaped tensors along a new leading axis.
inline Tensor stack(std::span<const Tensor> items) {
  if (items.empty()) throw ShapeError("stack: no tensors");
  Shape shape{items.size()};
  shape.insert(shape.end(), items[0].shape().begin(), items[0].shape().end());
  Tensor out(shape);
  for (std::size_t i = 0; i < items.size(); ++i) {
    require_same_shape(items[i], items[0], "stack");
    out.set_slice(i, items[i]);
  }
  return out;
}

/// Concatenates along the leading axis.
inline Tensor concat_leading(const Tensor& a, const Tensor& b) {
  if (a.slice_shape() != b.slice_shape()) throw ShapeError("concat: trailing shape mismatch");
  Shape shape = a.shape();
  shape[0] += b.shape()[0];
  std::vector<double> data(a.storage());
  data.insert(data.end(), b.storage().begin(), b.storage().end());
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace dawnfm
