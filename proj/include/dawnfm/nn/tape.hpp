#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstring>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dawnfm/nn/parameters.hpp"

namespace dawnfm::nn {

/// Extents of an activation stored channel-major: [C][N][H][W]. Dense layers
/// use H = W = 1, so a feature matrix is C x N.
struct Dims {
  std::size_t c = 0;
  std::size_t n = 0;
  std::size_t h = 1;
  std::size_t w = 1;

  std::size_t hw() const { return h * w; }
  std::size_t columns() const { return n * h * w; }
  std::size_t numel() const { return c * n * h * w; }
  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Allocator that leaves new elements default-initialized (no zero fill).
template <typename T>
struct UninitializedAllocator : std::allocator<T> {
  template <typename U>
  struct rebind {
    using other = UninitializedAllocator<U>;
  };
  using std::allocator<T>::allocator;
  template <typename U>
  void construct(U* p) noexcept {
    ::new (static_cast<void*>(p)) U;
  }
  template <typename U, typename... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
};

using Buffer = std::vector<double, UninitializedAllocator<double>>;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

/// Minimal reverse-mode recorder.
///
/// Every operation appends a node holding its value and, when recording, a
/// closure that pushes the node's gradient to its inputs and to the
/// parameters it read. Parameter gradients accumulate across backward calls;
/// intermediate gradients are reset at the start of each call.
class Tape {
 public:
  using Var = std::size_t;

  Tape(ParameterSet& params, bool record) : params_(params), record_(record) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t node_count() const { return nodes_.size(); }

  Var input(Dims d, const std::vector<double>& values, bool needs_grad) {
    if (values.size() != d.numel()) throw ShapeError("tape input: size mismatch");
    return push(d, Buffer(values.begin(), values.end()), needs_grad);
  }

  const Buffer& value(Var v) const { return nodes_[v].value; }
  const Dims& dims(Var v) const { return nodes_[v].dims; }

  /// Gradient of a node after backward; empty if nothing reached it.
  const Buffer& grad(Var v) const { return nodes_[v].grad; }

  /// k x k convolution, stride 1, zero padding k/2. Weight shape
  /// (cout, cin, k, k) or (cout, cin) for k == 1; bias shape (cout).
  Var conv(Var x, std::size_t weight, std::size_t bias, std::size_t k) {
    const Dims in = dims(x);
    const Tensor& wt = params_[weight].value;
    const std::size_t cout = wt.dim(0);
    const std::size_t kdim = wt.size() / cout;
    if (kdim != in.c * k * k) {
      throw ShapeError("conv " + params_[weight].name + ": expected " + std::to_string(kdim / (k * k)) +
                       " input channels, got " + std::to_string(in.c));
    }
    const std::size_t cols_n = in.columns();
    Buffer cols;
    if (k != 1) cols = im2col(value(x), in, k);
    const double* cols_ptr = k == 1 ? value(x).data() : cols.data();

    Dims od{cout, in.n, in.h, in.w};
    Buffer out(od.numel());
    MatrixMap y(out.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(cols_n));
    ConstMatrixMap wm(wt.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(kdim));
    ConstMatrixMap cm(cols_ptr, static_cast<Eigen::Index>(kdim), static_cast<Eigen::Index>(cols_n));
    y.noalias() = wm * cm;
    const Tensor& bt = params_[bias].value;
    for (std::size_t o = 0; o < cout; ++o) y.row(static_cast<Eigen::Index>(o)).array() += bt[o];

    const Var out_var = push(od, std::move(out), true);
    if (record_) {
      add_backward([this, x, out_var, weight, bias, k, in, kdim, cols = std::move(cols)] {
        const std::size_t cout = params_[weight].value.dim(0);
        const auto cn = static_cast<Eigen::Index>(in.columns());
        ConstMatrixMap dy(nodes_[out_var].grad.data(), static_cast<Eigen::Index>(cout), cn);
        const double* cp = k == 1 ? nodes_[x].value.data() : cols.data();
        ConstMatrixMap cm(cp, static_cast<Eigen::Index>(kdim), cn);
        MatrixMap dw(params_[weight].grad.data(), static_cast<Eigen::Index>(cout),
                     static_cast<Eigen::Index>(kdim));
        dw.noalias() += dy * cm.transpose();
        double* db = params_[bias].grad.data();
        const double* g = nodes_[out_var].grad.data();
        for (std::size_t r = 0; r < cout; ++r) {
          double s = 0.0;
          for (Eigen::Index c = 0; c < cn; ++c) s += g[r * static_cast<std::size_t>(cn) + static_cast<std::size_t>(c)];
          db[r] += s;
        }
        if (!nodes_[x].needs_grad) return;
        ConstMatrixMap wm(params_[weight].value.data(), static_cast<Eigen::Index>(cout),
                          static_cast<Eigen::Index>(kdim));
        auto& gx = grad_buffer(x);
        if (k == 1) {
          MatrixMap dx(gx.data(), static_cast<Eigen::Index>(kdim), cn);
          dx.noalias() += wm.transpose() * dy;
        } else {
          RowMatrix dcols = wm.transpose() * dy;
          col2im_add(dcols.data(), in, k, gx);
        }
      });
    }
    return out_var;
  }

  /// Dense layer on C x N features; weight (out, in), bias (out).
  Var linear(Var x, std::size_t weight, std::size_t bias) {
    if (dims(x).hw() != 1) throw ShapeError("linear expects feature vectors");
    return conv(x, weight, bias, 1);
  }

  /// x * sigmoid(x)
  Var silu(Var x) {
    const auto& xv = value(x);
    Buffer sig(xv.size());
    Buffer out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) {
      sig[i] = 1.0 / (1.0 + std::exp(-xv[i]));
      out[i] = xv[i] * sig[i];
    }
    const Var o = push(dims(x), std::move(out), true);
    if (record_) {
      add_backward([this, x, o, sig = std::move(sig)] {
        if (!nodes_[x].needs_grad) return;
        const auto& xv = nodes_[x].value;
        const auto& g = nodes_[o].grad;
        auto& gx = grad_buffer(x);
        for (std::size_t i = 0; i < xv.size(); ++i) {
          const double s = sig[i];
          gx[i] += g[i] * (s + xv[i] * s * (1.0 - s));
        }
      });
    }
    return o;
  }

  Var add(Var a, Var b) {
    if (!(dims(a) == dims(b))) throw ShapeError("tape add: dims mismatch");
    Buffer out = value(a);
    const auto& bv = value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    const Var o = push(dims(a), std::move(out), true);
    if (record_) {
      add_backward([this, a, b, o] {
        for (Var in : {a, b}) {
          if (!nodes_[in].needs_grad) continue;
          auto& gi = grad_buffer(in);
          const auto& g = nodes_[o].grad;
          for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
        }
      });
    }
    return o;
  }

  /// h[c][n][:] += e[c][n] for e of dims (C, N, 1, 1).
  Var add_channel_bias(Var h, Var e) {
    const Dims hd = dims(h);
    const Dims ed = dims(e);
    if (ed.c != hd.c || ed.n != hd.n || ed.hw() != 1) throw ShapeError("channel bias: dims mismatch");
    Buffer out = value(h);
    const auto& ev = value(e);
    const std::size_t hw = hd.hw();
    for (std::size_t cn = 0; cn < hd.c * hd.n; ++cn) {
      for (std::size_t i = 0; i < hw; ++i) out[cn * hw + i] += ev[cn];
    }
    const Var o = push(hd, std::move(out), true);
    if (record_) {
      add_backward([this, h, e, o, hd] {
        const auto& g = nodes_[o].grad;
        const std::size_t hw = hd.hw();
        if (nodes_[h].needs_grad) {
          auto& gh = grad_buffer(h);
          for (std::size_t i = 0; i < g.size(); ++i) gh[i] += g[i];
        }
        if (nodes_[e].needs_grad) {
          auto& ge = grad_buffer(e);
          for (std::size_t cn = 0; cn < hd.c * hd.n; ++cn) {
            double s = 0.0;
            for (std::size_t i = 0; i < hw; ++i) s += g[cn * hw + i];
            ge[cn] += s;
          }
        }
      });
    }
    return o;
  }

  /// 2 x 2 average pooling; H and W must be even.
  Var avgpool2(Var x) {
    const Dims in = dims(x);
    if (in.h % 2 || in.w % 2) throw ShapeError("avgpool2 needs even spatial extents");
    Dims od{in.c, in.n, in.h / 2, in.w / 2};
    Buffer out(od.numel());
    const auto& xv = value(x);
    for (std::size_t p = 0; p < in.c * in.n; ++p) {
      const double* src = xv.data() + p * in.hw();
      double* dst = out.data() + p * od.hw();
      for (std::size_t y = 0; y < od.h; ++y) {
        for (std::size_t xx = 0; xx < od.w; ++xx) {
          const double* s = src + 2 * y * in.w + 2 * xx;
          dst[y * od.w + xx] = 0.25 * (s[0] + s[1] + s[in.w] + s[in.w + 1]);
        }
      }
    }
    const Var o = push(od, std::move(out), true);
    if (record_) {
      add_backward([this, x, o, in, od] {
        if (!nodes_[x].needs_grad) return;
        const auto& g = nodes_[o].grad;
        auto& gx = grad_buffer(x);
        for (std::size_t p = 0; p < in.c * in.n; ++p) {
          const double* src = g.data() + p * od.hw();
          double* dst = gx.data() + p * in.hw();
          for (std::size_t y = 0; y < od.h; ++y) {
            for (std::size_t xx = 0; xx < od.w; ++xx) {
              const double v = 0.25 * src[y * od.w + xx];
              double* d = dst + 2 * y * in.w + 2 * xx;
              d[0] += v;
              d[1] += v;
              d[in.w] += v;
              d[in.w + 1] += v;
            }
          }
        }
      });
    }
    return o;
  }

  /// Nearest-neighbour 2x upsampling.
  Var upsample2(Var x) {
    const Dims in = dims(x);
    Dims od{in.c, in.n, in.h * 2, in.w * 2};
    Buffer out(od.numel());
    const auto& xv = value(x);
    for (std::size_t p = 0; p < in.c * in.n; ++p) {
      const double* src = xv.data() + p * in.hw();
      double* dst = out.data() + p * od.hw();
      for (std::size_t y = 0; y < od.h; ++y) {
        for (std::size_t xx = 0; xx < od.w; ++xx) dst[y * od.w + xx] = src[(y / 2) * in.w + xx / 2];
      }
    }
    const Var o = push(od, std::move(out), true);
    if (record_) {
      add_backward([this, x, o, in, od] {
        if (!nodes_[x].needs_grad) return;
        const auto& g = nodes_[o].grad;
        auto& gx = grad_buffer(x);
        for (std::size_t p = 0; p < in.c * in.n; ++p) {
          const double* src = g.data() + p * od.hw();
          double* dst = gx.data() + p * in.hw();
          for (std::size_t y = 0; y < od.h; ++y) {
            for (std::size_t xx = 0; xx < od.w; ++xx) dst[(y / 2) * in.w + xx / 2] += src[y * od.w + xx];
          }
        }
      });
    }
    return o;
  }

  /// Channel concatenation [a; b].
  Var concat(Var a, Var b) {
    const Dims ad = dims(a);
    const Dims bd = dims(b);
    if (ad.n != bd.n || ad.h != bd.h || ad.w != bd.w) throw ShapeError("concat: dims mismatch");
    Buffer out = value(a);
    out.insert(out.end(), value(b).begin(), value(b).end());
    const Var o = push(Dims{ad.c + bd.c, ad.n, ad.h, ad.w}, std::move(out), true);
    if (record_) {
      add_backward([this, a, b, o, na = ad.numel()] {
        const auto& g = nodes_[o].grad;
        if (nodes_[a].needs_grad) {
          auto& ga = grad_buffer(a);
          for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
        }
        if (nodes_[b].needs_grad) {
          auto& gb = grad_buffer(b);
          for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[na + i];
        }
      });
    }
    return o;
  }

  /// Propagates `seed` (dL/d out) back through every recorded operation.
  void backward(Var out, const std::vector<double>& seed) {
    if (!record_ || backward_fns_.empty() || out >= nodes_.size()) {
      throw StateError("backward called without a recorded forward pass");
    }
    if (seed.size() != nodes_[out].value.size()) throw ShapeError("backward: seed size mismatch");
    for (auto& n : nodes_) n.grad.clear();
    auto& g = grad_buffer(out);
    for (std::size_t i = 0; i < seed.size(); ++i) g[i] = seed[i];
    for (auto it = backward_fns_.rbegin(); it != backward_fns_.rend(); ++it) {
      if (nodes_[it->output].grad.empty()) continue;
      it->fn();
    }
  }

 private:
  struct Node {
    Dims dims;
    Buffer value;
    Buffer grad;
    bool needs_grad = false;
  };

  struct BackwardStep {
    Var output;
    std::function<void()> fn;
  };

  Var push(Dims d, Buffer value, bool needs_grad) {
    nodes_.push_back({d, std::move(value), {}, needs_grad});
    return nodes_.size() - 1;
  }

  void add_backward(std::function<void()> fn) { backward_fns_.push_back({nodes_.size() - 1, std::move(fn)}); }

  Buffer& grad_buffer(Var v) {
    auto& n = nodes_[v];
    if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
    return n.grad;
  }

  // Row block (ci, ky, kx) of the column matrix holds every input plane
  // shifted by (ky - k/2, kx - k/2) with zeros shifted in. Each plane is one
  // flat copy followed by zeroing of the rows and columns that wrapped.
  static Buffer im2col(const Buffer& x, const Dims& d, std::size_t k) {
    const std::size_t cols_n = d.columns();
    const auto pad = static_cast<std::ptrdiff_t>(k / 2);
    Buffer cols(d.c * k * k * cols_n);
    const auto H = static_cast<std::ptrdiff_t>(d.h);
    const auto W = static_cast<std::ptrdiff_t>(d.w);
    const auto HW = H * W;
    for (std::size_t ci = 0; ci < d.c; ++ci) {
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          double* dst = cols.data() + ((ci * k + ky) * k + kx) * cols_n;
          const auto dy = static_cast<std::ptrdiff_t>(ky) - pad;
          const auto dx = static_cast<std::ptrdiff_t>(kx) - pad;
          const std::ptrdiff_t shift = dy * W + dx;
          const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
          const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(HW, HW - shift);
          const std::ptrdiff_t row_lo = std::max<std::ptrdiff_t>(0, -dy);
          const std::ptrdiff_t row_hi = std::min<std::ptrdiff_t>(H, H - dy);
          const std::ptrdiff_t col_lo = std::max<std::ptrdiff_t>(0, -dx);
          const std::ptrdiff_t col_hi = std::min<std::ptrdiff_t>(W, W - dx);
          for (std::size_t n = 0; n < d.n; ++n) {
            const double* src = x.data() + (ci * d.n + n) * d.hw();
            double* plane = dst + n * d.hw();
            if (hi > lo) std::memcpy(plane + lo, src + lo + shift, static_cast<std::size_t>(hi - lo) * sizeof(double));
            for (std::ptrdiff_t y = 0; y < H; ++y) {
              double* row = plane + y * W;
              if (y < row_lo || y >= row_hi) {
                for (std::ptrdiff_t xx = 0; xx < W; ++xx) row[xx] = 0.0;
                continue;
              }
              for (std::ptrdiff_t xx = 0; xx < col_lo; ++xx) row[xx] = 0.0;
              for (std::ptrdiff_t xx = col_hi; xx < W; ++xx) row[xx] = 0.0;
            }
          }
        }
      }
    }
    return cols;
  }

  static void col2im_add(const double* cols, const Dims& d, std::size_t k, Buffer& gx) {
    const std::size_t cols_n = d.columns();
    const auto pad = static_cast<std::ptrdiff_t>(k / 2);
    const auto H = static_cast<std::ptrdiff_t>(d.h);
    const auto W = static_cast<std::ptrdiff_t>(d.w);
    for (std::size_t ci = 0; ci < d.c; ++ci) {
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          const double* src = cols + ((ci * k + ky) * k + kx) * cols_n;
          const auto dy = static_cast<std::ptrdiff_t>(ky) - pad;
          const auto dx = static_cast<std::ptrdiff_t>(kx) - pad;
          for (std::size_t n = 0; n < d.n; ++n) {
            double* dst = gx.data() + (ci * d.n + n) * d.hw();
            for (std::ptrdiff_t y = 0; y < H; ++y) {
              const std::ptrdiff_t sy = y + dy;
              if (sy < 0 || sy >= H) continue;
              const double* row = src + n * d.hw() + static_cast<std::size_t>(y * W);
              double* drow = dst + sy * W;
              const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -dx);
              const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(W, W - dx);
              for (std::ptrdiff_t xx = lo; xx < hi; ++xx) drow[xx + dx] += row[xx];
            }
          }
        }
      }
    }
  }

  ParameterSet& params_;
  bool record_;
  std::vector<Node> nodes_;
  std::vector<BackwardStep> backward_fns_;
};

}  // namespace dawnfm::nn
