#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "dawnfm/ops/linear_operator.hpp"

namespace dawnfm::eval {

/// Receives non-fatal diagnostics (clamping, window fallback). Defaults to stderr.
inline std::function<void(const std::string&)>& warning_handler() {
  static std::function<void(const std::string&)> h = [](const std::string& msg) {
    std::cerr << "warning: " << msg << "\n";
  };
  return h;
}

inline void warn(const std::string& msg) {
  if (warning_handler()) warning_handler()(msg);
}

inline double mse(const Tensor& x_true, const Tensor& x_rec) {
  require_same_shape(x_true, x_rec, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < x_true.size(); ++i) {
    const double d = x_true[i] - x_rec[i];
    s += d * d;
  }
  return s / static_cast<double>(x_true.size());
}

/// -10 log10(mse); +inf when the images are identical.
inline double psnr_from_mse(double m) {
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(m);
}

inline double psnr(const Tensor& x_true, const Tensor& x_rec) { return psnr_from_mse(mse(x_true, x_rec)); }

struct Misfit {
  /// 1/2 sum (A x - b)^2
  double raw = 0.0;
  /// raw divided by the number of data entries
  double normalized = 0.0;
};

inline Misfit misfit_metric(const ops::LinearOperator& op, const Tensor& x_rec, const Tensor& b) {
  require_shape(b, op.range_shape(), "misfit data");
  const Tensor ax = op.apply(x_rec);
  double s = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double r = ax[i] - b[i];
    s += r * r;
  }
  return {0.5 * s, 0.5 * s / static_cast<double>(b.size())};
}

inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;
inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// Normalized 1D Gaussian taps of the SSIM window.
inline std::vector<double> ssim_taps() {
  std::vector<double> g(kSsimWindow);
  const double c = static_cast<double>(kSsimWindow / 2);
  double sum = 0.0;
  for (std::size_t i = 0; i < kSsimWindow; ++i) {
    const double x = static_cast<double>(i) - c;
    g[i] = std::exp(-x * x / (2.0 * kSsimSigma * kSsimSigma));
    sum += g[i];
  }
  for (auto& v : g) v /= sum;
  return g;
}

namespace detail {

inline double ssim_formula(double ma, double mb, double va, double vb, double cov) {
  return ((2.0 * ma * mb + kSsimC1) * (2.0 * cov + kSsimC2)) / ((ma * ma + mb * mb + kSsimC1) * (va + vb + kSsimC2));
}

inline double ssim_global(const double* a, const double* b, std::size_t n) {
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double va = 0.0, vb = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
    cov += (a[i] - ma) * (b[i] - mb);
  }
  const double inv = 1.0 / static_cast<double>(n);
  return ssim_formula(ma, mb, va * inv, vb * inv, cov * inv);
}

/// Gaussian-weighted SSIM averaged over every fully contained 11x11 window.
inline double ssim_windowed(const double* a, const double* b, std::size_t h, std::size_t w) {
  const auto g = ssim_taps();
  const std::size_t k = kSsimWindow;
  const std::size_t oh = h - k + 1, ow = w - k + 1;
  // Horizontal pass over the five moment images, then vertical.
  std::vector<double> row(5 * h * ow, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double s[5] = {0, 0, 0, 0, 0};
      for (std::size_t j = 0; j < k; ++j) {
        const double va = a[y * w + x + j], vb = b[y * w + x + j];
        s[0] += g[j] * va;
        s[1] += g[j] * vb;
        s[2] += g[j] * va * va;
        s[3] += g[j] * vb * vb;
        s[4] += g[j] * va * vb;
      }
      for (int q = 0; q < 5; ++q) row[(q * h + y) * ow + x] = s[q];
    }
  }
  double total = 0.0;
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double s[5] = {0, 0, 0, 0, 0};
      for (std::size_t i = 0; i < k; ++i) {
        for (int q = 0; q < 5; ++q) s[q] += g[i] * row[(q * h + y + i) * ow + x];
      }
      const double ma = s[0], mb = s[1];
      total += ssim_formula(ma, mb, s[2] - ma * ma, s[3] - mb * mb, s[4] - ma * mb);
    }
  }
  return total / static_cast<double>(oh * ow);
}

}  // namespace detail

/// Mean SSIM with unit dynamic range. Accepts (H, W) or (C, H, W); channels
/// are averaged. Values outside [0, 1] are clamped, and images smaller than
/// the window use global statistics; both cases emit a warning.
inline double ssim(const Tensor& x_true, const Tensor& x_rec) {
  require_same_shape(x_true, x_rec, "ssim");
  if (x_true.ndim() != 2 && x_true.ndim() != 3) {
    throw ShapeError("ssim: expected (H, W) or (C, H, W), got " + to_string(x_true.shape()));
  }
  const std::size_t c = x_true.ndim() == 3 ? x_true.dim(0) : 1;
  const std::size_t h = x_true.dim(x_true.ndim() - 2);
  const std::size_t w = x_true.dim(x_true.ndim() - 1);
  std::vector<double> a(x_true.values().begin(), x_true.values().end());
  std::vector<double> b(x_rec.values().begin(), x_rec.values().end());
  bool clamped = false;
  for (auto* v : {&a, &b}) {
    for (auto& x : *v) {
      if (x < 0.0 || x > 1.0) {
        x = std::clamp(x, 0.0, 1.0);
        clamped = true;
      }
    }
  }
  if (clamped) warn("ssim: values outside [0, 1] were clamped");
  const bool global = h < kSsimWindow || w < kSsimWindow;
  if (global) warn("ssim: image smaller than the 11x11 window, using global statistics");
  double total = 0.0;
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* pa = a.data() + ch * h * w;
    const double* pb = b.data() + ch * h * w;
    total += global ? detail::ssim_global(pa, pb, h * w) : detail::ssim_windowed(pa, pb, h, w);
  }
  return total / static_cast<double>(c);
}

struct MetricRow {
  std::string name;
  double mse = 0.0;
  double misfit = 0.0;
  double misfit_normalized = 0.0;
  double ssim = 0.0;
  double psnr = 0.0;
};

/// ssim is NaN when the operator domain is not an image.
inline MetricRow evaluate_image(std::string name, const ops::LinearOperator& op, const Tensor& x_true,
                                const Tensor& x_rec, const Tensor& b) {
  MetricRow r;
  r.name = std::move(name);
  const Tensor truth = x_true.reshaped(op.domain_shape());
  const Tensor rec = x_rec.reshaped(op.domain_shape());
  r.mse = mse(truth, rec);
  const Misfit m = misfit_metric(op, rec, b);
  r.misfit = m.raw;
  r.misfit_normalized = m.normalized;
  const std::size_t nd = truth.ndim();
  r.ssim = nd == 2 || nd == 3 ? ssim(truth, rec) : std::numeric_limits<double>::quiet_NaN();
  r.psnr = psnr_from_mse(r.mse);
  return r;
}

/// Per-column mean and population standard deviation.
struct MetricReport {
  std::vector<MetricRow> rows;
  MetricRow mean;
  MetricRow std;
};

inline MetricReport aggregate(std::vector<MetricRow> rows) {
  if (rows.empty()) throw ParameterError("aggregate: no rows");
  MetricReport rep;
  rep.mean.name = "mean";
  rep.std.name = "std";
  const double n = static_cast<double>(rows.size());
  auto column = [&](double MetricRow::*f) {
    double s = 0.0;
    for (const auto& r : rows) s += r.*f;
    const double mu = s / n;
    double v = 0.0;
    for (const auto& r : rows) v += (r.*f - mu) * (r.*f - mu);
    rep.mean.*f = mu;
    rep.std.*f = std::sqrt(v / n);
  };
  for (auto f : {&MetricRow::mse, &MetricRow::misfit, &MetricRow::misfit_normalized, &MetricRow::ssim, &MetricRow::psnr}) {
    column(f);
  }
  rep.rows = std::move(rows);
  return rep;
}

}  // namespace dawnfm::eval
