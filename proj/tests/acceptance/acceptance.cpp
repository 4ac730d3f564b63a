// Acceptance checks, one PASS/FAIL line per criterion.
//
//   acceptance [--work DIR] [--only 1,2,...] [--keep]
//
// Criteria 6, 7, 8 and 10 share the desk-scale deblurring runs under DIR/desk.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "../reference/radon_reference.hpp"
#include "../reference/ssim_reference.hpp"
#include "dawnfm/data/datasets.hpp"
#include "dawnfm/eval/metrics.hpp"
#include "dawnfm/experiments/run.hpp"
#include "dawnfm/infer/ensemble.hpp"
#include "dawnfm/ops/blur.hpp"
#include "dawnfm/ops/diagnostics.hpp"
#include "dawnfm/ops/radon.hpp"
#include "dawnfm/ops/sum.hpp"
#include "dawnfm/train/loss.hpp"

namespace fs = std::filesystem;
using namespace dawnfm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

Tensor uniform_tensor(SeededRng& rng, const Shape& shape, double lo = 0.0, double hi = 1.0) {
  Tensor t(shape);
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// ---- criterion 1 ----------------------------------------------------------

Outcome operators() {
  SeededRng rng(101);
  double worst_dot = 0.0;
  std::vector<ops::OperatorPtr> list;
  list.push_back(std::make_unique<ops::GaussianBlurOperator>(16));
  list.push_back(std::make_unique<ops::GaussianBlurOperator>(28));
  list.push_back(std::make_unique<ops::RadonOperator>(8));
  list.push_back(std::make_unique<ops::RadonOperator>(16));
  list.push_back(std::make_unique<ops::SumOperator>());
  for (const auto& op : list) worst_dot = std::max(worst_dot, ops::adjoint_dot_test(*op, rng, 20));
  double worst_dense = 0.0;
  for (std::size_t s = 3; s <= 6; ++s) {
    const std::size_t na = 12;
    ops::RadonOperator op(s, na);
    const Tensor m = reference::radon_dense_oracle(s, na);
    for (int trial = 0; trial < 3; ++trial) {
      const Tensor x = uniform_tensor(rng, {s, s}, -1, 1);
      const Tensor y = uniform_tensor(rng, op.range_shape(), -1, 1);
      worst_dense = std::max(worst_dense, max_abs_diff(op.apply(x).reshaped({m.dim(0)}),
                                                       reference::matvec(m, x.reshaped({s * s}), false)));
      worst_dense = std::max(worst_dense, max_abs_diff(op.adjoint(y).reshaped({s * s}),
                                                       reference::matvec(m, y.reshaped({m.dim(0)}), true)));
    }
  }
  return {worst_dot < 1e-9 && worst_dense < 1e-9,
          "max dot-test error " + fmt(worst_dot, 3) + ", max dense Radon mismatch " + fmt(worst_dense, 3)};
}

// ---- criterion 2 ----------------------------------------------------------

Outcome integrator() {
  auto field = [](const Tensor& x, double) { return x; };
  auto err = [&](std::size_t n) { return std::abs(infer::rk4_integrate(field, Tensor::vector({1.0}), n)[0] - std::exp(1.0)); };
  const double e100 = err(100);
  const double ratio = err(50) / e100;
  const double ratio_coarse = err(10) / err(20);
  const bool ok = e100 < 1e-9 && ratio >= 14 && ratio <= 18 && ratio_coarse >= 14 && ratio_coarse <= 18;
  return {ok, "error at h=1/100 " + fmt(e100, 3) + ", halving ratios " + fmt(ratio_coarse) + " (h=1/10) and " +
                  fmt(ratio) + " (h=1/50)"};
}

// ---- criterion 3 ----------------------------------------------------------

train::TrainingBatch random_batch(const nn::VelocityModel& model, const ops::LinearOperator& op, std::size_t n,
                                  SeededRng& rng) {
  train::TrainingBatch b;
  b.x1 = uniform_tensor(rng, model.batch_shape(n));
  b.x0 = sample_standard_normal(rng, model.batch_shape(n));
  Shape bs{n};
  for (auto e : op.range_shape()) bs.push_back(e);
  b.b = Tensor(bs);
  const std::size_t d = b.x1.slice_size();
  for (std::size_t i = 0; i < n; ++i) {
    b.t.push_back(rng.uniform());
    b.noise_level.push_back(rng.uniform(0.0, 0.2));
    const Tensor x(op.domain_shape(), std::vector<double>(b.x1.data() + i * d, b.x1.data() + (i + 1) * d));
    const Tensor clean = op.apply(x);
    for (std::size_t k = 0; k < clean.size(); ++k) b.b[i * clean.size() + k] = clean[k] + 0.05 * rng.normal();
  }
  return b;
}

double gradient_error(nn::VelocityModel& model, const ops::LinearOperator& op, const train::TrainingBatch& batch,
                      const std::vector<std::pair<std::size_t, std::size_t>>& picks) {
  auto& ps = model.params();
  ps.zero_grad();
  train::compute_loss(model, op, batch, 1.0);
  std::vector<double> analytic;
  for (auto [p, j] : picks) analytic.push_back(ps[p].grad[j]);
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < picks.size(); ++i) {
    double& w = ps[picks[i].first].value[picks[i].second];
    const double saved = w;
    w = saved + h;
    const double up = train::compute_loss(model, op, batch, 1.0).total;
    w = saved - h;
    const double down = train::compute_loss(model, op, batch, 1.0).total;
    w = saved;
    const double numeric = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(analytic[i] - numeric) /
                                std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6}));
  }
  ps.zero_grad();
  return worst;
}

Outcome gradients() {
  SeededRng rng(303);
  ops::SumOperator sum;
  auto mlp = nn::make_model(nn::ModelConfig::toy_mlp(true), 1);
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t p = 0; p < mlp->params().size(); ++p) {
    for (std::size_t j = 0; j < mlp->params()[p].value.size(); ++j) all.emplace_back(p, j);
  }
  const double mlp_err = gradient_error(*mlp, sum, random_batch(*mlp, sum, 6, rng), all);

  ops::GaussianBlurOperator blur(8, 2.0, 2.0);
  auto unet = nn::make_model(nn::ModelConfig::unet_for(1, 8, true), 2);
  std::vector<std::pair<std::size_t, std::size_t>> picks;
  for (std::size_t p = 0; p < unet->params().size(); ++p) picks.emplace_back(p, rng.index(unet->params()[p].value.size()));
  while (picks.size() < 100) {
    const std::size_t p = rng.index(unet->params().size());
    picks.emplace_back(p, rng.index(unet->params()[p].value.size()));
  }
  const double unet_err = gradient_error(*unet, blur, random_batch(*unet, blur, 4, rng), picks);
  return {mlp_err < 1e-4 && unet_err < 1e-4,
          "mlp " + std::to_string(all.size()) + " parameters max rel error " + fmt(mlp_err, 3) + "; unet " +
              std::to_string(picks.size()) + " sampled parameters max rel error " + fmt(unet_err, 3)};
}

// ---- criterion 4 ----------------------------------------------------------

struct TrueVelocity {
  nn::ModelConfig cfg;
  Tensor velocity;
  const nn::ModelConfig& config() const { return cfg; }
  Tensor forward(const Tensor& x, const Tensor&, std::span<const double>, std::optional<std::span<const double>>, bool) {
    require_same_shape(x, velocity, "true velocity");
    return velocity;
  }
  Tensor backward(const Tensor& up) { return Tensor(up.shape()); }
};

Outcome exactness() {
  SeededRng rng(404);
  ops::GaussianBlurOperator op(16);
  const std::size_t n = 6;
  const Tensor phantoms = data::gen_phantoms(rng, n, 16);
  train::TrainingBatch b;
  b.x1 = phantoms.reshaped({n, 1, 16, 16});
  b.x0 = sample_standard_normal(rng, b.x1.shape());
  b.b = Tensor({n, 16, 16});
  for (std::size_t i = 0; i < n; ++i) {
    b.t.push_back(rng.uniform());
    b.noise_level.push_back(0.0);
    const auto obs = flow::inject_noise(op, phantoms.slice(i), 0.0, rng);
    std::copy_n(obs.b.data(), 256, b.b.data() + i * 256);
  }
  TrueVelocity stub{nn::ModelConfig::unet_for(1, 16, true), b.x1 - b.x0};
  const auto loss = train::compute_loss(stub, op, b, 1.0);
  const double worst_loss = std::max({std::abs(loss.total), std::abs(loss.velocity_term), std::abs(loss.misfit_term)});
  const Tensor end = infer::rk4_integrate([&](const Tensor&, double) { return stub.velocity; }, b.x0, 100);
  const double transport = max_abs_diff(end, b.x1);
  return {worst_loss <= 1e-12 && transport <= 1e-10,
          "loss (" + fmt(loss.total, 3) + ", " + fmt(loss.velocity_term, 3) + ", " + fmt(loss.misfit_term, 3) +
              "), rk4 endpoint error " + fmt(transport, 3)};
}

// ---- criterion 5 ----------------------------------------------------------

Outcome duathlon(const fs::path& work, std::ostream& log) {
  const fs::path dir = work / "duathlon";
  experiments::ExperimentConfig cfg = experiments::ExperimentConfig::duathlon();
  cfg.output_dir = (dir / "model").string();
  experiments::run_train(cfg, dir / "model", std::nullopt, &log);
  const fs::path ckpt = dir / "model" / "checkpoint";
  const auto ck = train::load_checkpoint(ckpt);
  const std::size_t steps = ck.state.adam.step;
  const double range = ck.state.reference_range.value();
  const double sigma = 0.02 * range;

  SeededRng draw(505);
  const double x1 = 3.0 + 0.25 * draw.normal(), x2 = 3.0 + 0.25 * draw.normal();
  const double b = x1 + x2 + sigma * draw.normal();
  const auto res = experiments::run_toy_duathlon(b, 2.0, 200, dir / "posterior", ckpt, 5, &log);
  std::size_t right = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    if (res.posterior.samples[2 * i] + res.posterior.samples[2 * i + 1] > 4.0) ++right;
  }

  // Rejection-sampling oracle: prior draws accepted with the Gaussian likelihood.
  SeededRng oracle_rng(506);
  const Tensor prior = data::sample_duathlon_prior(oracle_rng, 1000000);
  double s0 = 0, s1 = 0, q0 = 0, q1 = 0, accepted = 0;
  for (std::size_t i = 0; i < 1000000; ++i) {
    const double r = prior[2 * i] + prior[2 * i + 1] - b;
    if (oracle_rng.uniform() < std::exp(-r * r / (2 * sigma * sigma))) {
      s0 += prior[2 * i];
      s1 += prior[2 * i + 1];
      q0 += prior[2 * i] * prior[2 * i];
      q1 += prior[2 * i + 1] * prior[2 * i + 1];
      accepted += 1;
    }
  }
  const double m0 = s0 / accepted, m1 = s1 / accepted;
  const double sd0 = std::sqrt(q0 / accepted - m0 * m0), sd1 = std::sqrt(q1 / accepted - m1 * m1);
  const double z0 = std::abs(res.posterior.mean[0] - m0) / sd0;
  const double z1 = std::abs(res.posterior.mean[1] - m1) / sd1;
  const bool ok = steps <= 20000 && right >= 190 && z0 <= 3.0 && z1 <= 3.0;
  return {ok, std::to_string(steps) + " steps; b " + fmt(b) + "; " + std::to_string(right) +
                  "/200 samples nearer (3,3); ensemble mean (" + fmt(res.posterior.mean[0]) + ", " +
                  fmt(res.posterior.mean[1]) + ") vs oracle (" + fmt(m0) + ", " + fmt(m1) + ") from " +
                  fmt(accepted, 6) + " accepted draws, deviation " + fmt(std::max(z0, z1), 3) + " posterior std"};
}

// ---- criteria 6, 7, 8, 10 -------------------------------------------------

class Desk {
 public:
  Desk(fs::path work, std::ostream& log) : dir_(std::move(work) / "desk"), log_(log) {}

  static experiments::ExperimentConfig config(bool noise) {
    auto c = experiments::ExperimentConfig::desk_deblur(noise);
    c.train.checkpoint_every = 100;
    return c;
  }

  fs::path informed() { return trained("informed", true); }
  fs::path blind() { return trained("blind", false); }

  /// M=8, p=5% on the full test set, plus metric CSVs for the mean and the A^T b baseline.
  fs::path primary_inference(const fs::path& run) {
    const fs::path out = run / "infer_p5";
    if (done_.insert(out.string()).second) {
      experiments::InferOptions o;
      o.noise_pct = 5.0;
      o.ensemble = 8;
      o.seed = 1;
      experiments::run_infer(run / "checkpoint", run / "data" / "test.dwnt", o, out, &log_);
      experiments::run_eval(out, out, config(true).op, run / "metrics_mean_p5.csv", "mean");
      experiments::run_eval(out, out, config(true).op, run / "metrics_atb_p5.csv", "atb");
    }
    return out;
  }

  fs::path dir() const { return dir_; }

 private:
  fs::path trained(const std::string& name, bool noise) {
    const fs::path run = dir_ / name;
    if (done_.insert(run.string()).second) {
      auto cfg = config(noise);
      cfg.output_dir = run.string();
      experiments::run_train(cfg, run, std::nullopt, &log_);
    }
    return run;
  }

  fs::path dir_;
  std::ostream& log_;
  std::set<std::string> done_;
};

Outcome deblurring(Desk& desk) {
  const fs::path run = desk.informed();
  desk.primary_inference(run);
  const auto mean = io::read_csv(run / "metrics_mean_p5.csv");
  const auto atb = io::read_csv(run / "metrics_atb_p5.csv");
  const std::size_t images = mean.size() - 3;
  const double pm = io::parse_double(mean[mean.size() - 2][5]);
  const double pa = io::parse_double(atb[atb.size() - 2][5]);
  const double sm = io::parse_double(mean[mean.size() - 2][4]);
  return {images == 100 && pm >= pa + 2.0,
          std::to_string(images) + " test images, mean PSNR " + fmt(pm) + " dB vs A^T b " + fmt(pa) +
              " dB (gain " + fmt(pm - pa) + " dB), mean SSIM " + fmt(sm)};
}

Outcome robustness(Desk& desk, std::ostream& log) {
  const fs::path runs[2] = {desk.informed(), desk.blind()};
  double psnr[2];
  std::size_t images = 0;
  for (int k = 0; k < 2; ++k) {
    const fs::path out = runs[k] / "infer_p15";
    experiments::InferOptions o;
    o.noise_pct = 15.0;
    o.ensemble = 8;
    o.seed = 1;
    o.limit = 50;
    o.write_images = false;
    experiments::run_infer(runs[k] / "checkpoint", runs[k] / "data" / "test.dwnt", o, out, &log);
    const auto rep = experiments::run_eval(out, out, Desk::config(true).op, runs[k] / "metrics_mean_p15.csv");
    psnr[k] = rep.mean.psnr;
    images = rep.rows.size();
  }
  return {images >= 50 && psnr[0] - psnr[1] >= 0.0,
          "p=15% over " + std::to_string(images) + " images: noise-informed " + fmt(psnr[0]) + " dB, noise-blind " +
              fmt(psnr[1]) + " dB (difference " + fmt(psnr[0] - psnr[1], 3) + " dB)"};
}

// Pixels within 2 of an intensity jump > 0.05 in the ground truth.
std::vector<bool> edge_band(const Tensor& truth) {
  const std::size_t h = truth.dim(0), w = truth.dim(1);
  std::vector<bool> edge(h * w, false), band(h * w, false);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (r + 1 < h && std::abs(truth.at(r, c) - truth.at(r + 1, c)) > 0.05) edge[r * w + c] = edge[(r + 1) * w + c] = true;
      if (c + 1 < w && std::abs(truth.at(r, c) - truth.at(r, c + 1)) > 0.05) edge[r * w + c] = edge[r * w + c + 1] = true;
    }
  }
  const long hh = static_cast<long>(h), ww = static_cast<long>(w);
  for (long r = 0; r < hh; ++r) {
    for (long c = 0; c < ww; ++c) {
      if (!edge[r * ww + c]) continue;
      for (long dr = -2; dr <= 2; ++dr) {
        for (long dc = -2; dc <= 2; ++dc) {
          if (r + dr >= 0 && r + dr < hh && c + dc >= 0 && c + dc < ww) band[(r + dr) * ww + c + dc] = true;
        }
      }
    }
  }
  return band;
}

Outcome uncertainty(Desk& desk, std::ostream& log) {
  const fs::path run = desk.informed();
  const fs::path out = run / "infer_m32";
  experiments::InferOptions o;
  o.noise_pct = 5.0;
  o.ensemble = 32;
  o.seed = 2;
  o.limit = 20;
  experiments::run_infer(run / "checkpoint", run / "data" / "test.dwnt", o, out, &log);
  std::size_t good = 0, checked = 0;
  double ratio_sum = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    const Tensor truth = io::deserialize_tensor(out / experiments::indexed("truth", i, ".dwnt"));
    const Tensor sd = io::deserialize_tensor(out / experiments::indexed("std", i, ".dwnt"));
    const auto band = edge_band(truth);
    double in = 0, out_sum = 0;
    std::size_t n_in = 0, n_out = 0;
    for (std::size_t k = 0; k < band.size(); ++k) {
      if (band[k]) {
        in += sd[k];
        ++n_in;
      } else {
        out_sum += sd[k];
        ++n_out;
      }
    }
    if (n_in == 0 || n_out == 0) continue;
    ++checked;
    const double ratio = (in / n_in) / (out_sum / n_out);
    ratio_sum += ratio;
    if (ratio > 1.0) ++good;
  }
  return {checked >= 20 && good * 10 >= checked * 7,
          std::to_string(good) + "/" + std::to_string(checked) +
              " images with higher mean std in the edge band (mean band/rest ratio " +
              fmt(checked ? ratio_sum / static_cast<double>(checked) : 0.0) + ")"};
}

std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome determinism(Desk& desk, std::ostream& log) {
  const fs::path a = desk.informed();
  desk.primary_inference(a);

  // Fresh rerun of the whole pipeline in another directory.
  const fs::path b = desk.dir() / "rerun";
  fs::remove_all(b);
  auto cfg = Desk::config(true);
  cfg.output_dir = b.string();
  experiments::run_train(cfg, b, std::nullopt, &log);
  experiments::InferOptions o;
  o.noise_pct = 5.0;
  o.ensemble = 8;
  o.seed = 1;
  experiments::run_infer(b / "checkpoint", b / "data" / "test.dwnt", o, b / "infer_p5", &log);
  experiments::run_eval(b / "infer_p5", b / "infer_p5", cfg.op, b / "metrics_mean_p5.csv", "mean");
  experiments::run_eval(b / "infer_p5", b / "infer_p5", cfg.op, b / "metrics_atb_p5.csv", "atb");
  std::size_t compared = 0, differing = 0;
  std::map<std::string, std::size_t> kinds;
  for (const auto& rel : files_under(b)) {
    ++compared;
    ++kinds[rel.extension().string()];
    if (!fs::exists(a / rel) || io::read_file(a / rel) != io::read_file(b / rel)) {
      ++differing;
      log << "rerun differs: " << rel.string() << "\n";
    }
  }

  // Resume from the mid-training checkpoint.
  const fs::path c = desk.dir() / "resumed";
  fs::remove_all(c);
  cfg.output_dir = c.string();
  experiments::run_train(cfg, c, a / "checkpoints" / "epoch_0100", &log);
  std::size_t resume_diff = 0, resume_files = 0;
  for (const auto& rel : files_under(c / "checkpoint")) {
    ++resume_files;
    if (io::read_file(a / "checkpoint" / rel) != io::read_file(c / "checkpoint" / rel)) ++resume_diff;
  }
  const bool losses_same = io::read_file(a / "losses.csv") == io::read_file(c / "losses.csv");
  const bool all_kinds = kinds[".dwnt"] > 0 && kinds[".pgm"] > 0 && kinds[".csv"] > 0 && kinds[".json"] > 0;
  return {differing == 0 && all_kinds && resume_diff == 0 && losses_same && resume_files > 0,
          "rerun: " + std::to_string(compared - differing) + "/" + std::to_string(compared) +
              " files identical (" + std::to_string(kinds[".dwnt"]) + " tensors, " + std::to_string(kinds[".pgm"]) +
              " images, " + std::to_string(kinds[".csv"]) + " CSVs, " + std::to_string(kinds[".json"]) +
              " manifests); resume from epoch 100: " + std::to_string(resume_files - resume_diff) + "/" +
              std::to_string(resume_files) + " checkpoint files identical, losses.csv " +
              (losses_same ? "identical" : "differs")};
}

// ---- criterion 9 ----------------------------------------------------------

Outcome metrics() {
  SeededRng rng(909);
  double worst_psnr = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Tensor a = uniform_tensor(rng, {8, 8}), b = uniform_tensor(rng, {8, 8});
    worst_psnr = std::max(worst_psnr, std::abs(eval::psnr(a, b) + 10.0 * std::log10(eval::mse(a, b))));
  }
  double worst_self = 0.0, worst_ref = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Tensor a = uniform_tensor(rng, {32, 32});
    Tensor b = a;
    const double noise = 0.05 + 0.02 * i;
    for (auto& v : b.values()) v = std::clamp(v + noise * rng.normal(), 0.0, 1.0);
    worst_self = std::max(worst_self, std::abs(eval::ssim(a, a) - 1.0));
    const double ref = reference::ssim_bruteforce(std::vector<double>(a.values().begin(), a.values().end()),
                                                  std::vector<double>(b.values().begin(), b.values().end()), 32, 32);
    worst_ref = std::max(worst_ref, std::abs(eval::ssim(a, b) - ref));
  }
  ops::DenseOperator id(Tensor({4, 4}, {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1}));
  const Tensor x = Tensor::vector({0.1, 0.2, 0.3, 0.4});
  const auto zero = eval::misfit_metric(id, x, x);
  const auto unit = eval::misfit_metric(id, x, x - Tensor({4}, 1.0));
  const bool misfit_ok = zero.raw == 0.0 && zero.normalized == 0.0 && unit.raw == 2.0 && unit.normalized == 0.5;
  return {worst_psnr <= 1e-12 && worst_self <= 1e-12 && worst_ref <= 1e-6 && misfit_ok,
          "psnr identity max error " + fmt(worst_psnr, 3) + "; |ssim(x,x)-1| " + fmt(worst_self, 3) +
              "; ssim vs reference max diff " + fmt(worst_ref, 3) + "; misfit examples " +
              (misfit_ok ? "exact" : "wrong")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  fs::path work = fs::temp_directory_path() / "dawnfm_acceptance";
  std::string only;
  bool keep = false;
  app.add_option("--work", work, "scratch directory");
  app.add_option("--only", only, "comma-separated criterion numbers");
  app.add_flag("--keep", keep, "reuse the scratch directory instead of clearing it");
  CLI11_PARSE(app, argc, argv);

  std::set<int> selected;
  std::stringstream ss(only);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) selected.insert(std::stoi(item));
  }
  if (!keep) fs::remove_all(work);
  fs::create_directories(work);
  std::ofstream log(work / "acceptance.log");
  eval::warning_handler() = [&](const std::string& m) { log << "warning: " << m << "\n"; };
  Desk desk(work, log);

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, operators},
      {2, integrator},
      {3, gradients},
      {4, exactness},
      {5, [&] { return duathlon(work, log); }},
      {6, [&] { return deblurring(desk); }},
      {7, [&] { return robustness(desk, log); }},
      {8, [&] { return uncertainty(desk, log); }},
      {9, metrics},
      {10, [&] { return determinism(desk, log); }},
  };
  int failures = 0;
  for (const auto& [id, check] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::cout << "criterion " << id << " [PRIMARY] " << (o.pass ? "PASS" : "FAIL") << ": " << o.detail << " ("
              << fmt(secs, 3) << " s)" << std::endl;
    log.flush();
  }
  return failures == 0 ? 0 : 1;
}
