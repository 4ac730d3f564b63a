#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <regex>
#include <string>

#include "dawnfm/data/datasets.hpp"
#include "dawnfm/eval/metrics.hpp"
#include "dawnfm/experiments/config.hpp"
#include "dawnfm/io/csv.hpp"
#include "dawnfm/io/idx.hpp"
#include "dawnfm/io/image.hpp"
#include "dawnfm/ops/diagnostics.hpp"
#include "dawnfm/train/trainer.hpp"

namespace dawnfm::experiments {

namespace fs = std::filesystem;

struct Corpus {
  Tensor train;
  Tensor test;
};

inline std::string indexed(const char* prefix, std::size_t i, const char* ext) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s_%04zu%s", prefix, i, ext);
  return buf;
}

/// Materializes the train and test splits named by the dataset config.
inline Corpus load_corpus(const DatasetConfig& c) {
  Corpus out;
  if (c.kind == "synthetic-phantoms") {
    const SeededRng root(c.seed);
    SeededRng tr = root.stream(0), te = root.stream(1);
    out.train = data::gen_phantoms(tr, c.train_count, c.side, c.max_ellipses);
    if (c.test_count > 0) out.test = data::gen_phantoms(te, c.test_count, c.side, c.max_ellipses);
  } else if (c.kind == "duathlon-prior") {
    const SeededRng root(c.seed);
    SeededRng tr = root.stream(0), te = root.stream(1);
    out.train = data::sample_duathlon_prior(tr, c.train_count);
    if (c.test_count > 0) out.test = data::sample_duathlon_prior(te, c.test_count);
  } else if (c.kind == "idx") {
    const Tensor all = io::load_idx(c.path);
    if (all.ndim() != 3) throw ConfigError("dataset.path: expected an IDX image file (3D)");
    if (all.dim(0) < c.train_count + c.test_count) {
      throw ConfigError("dataset.train_count/test_count: file holds only " + std::to_string(all.dim(0)) + " images");
    }
    const std::size_t d = all.slice_size();
    auto take = [&](std::size_t first, std::size_t count) {
      return Tensor({count, all.dim(1), all.dim(2)},
                    std::vector<double>(all.data() + first * d, all.data() + (first + count) * d));
    };
    out.train = take(0, c.train_count);
    if (c.test_count > 0) out.test = take(c.train_count, c.test_count);
  } else {
    throw ConfigError("dataset.kind: unknown \"" + c.kind + "\"");
  }
  return out;
}

/// Operator, dataset and inference settings stored next to a checkpoint.
inline Json checkpoint_context(const ExperimentConfig& c) {
  Json j;
  j["task"] = c.task;
  j["operator"] = to_json(c.op);
  j["dataset"] = to_json(c.dataset);
  j["inference"] = io::to_json(c.inference);
  return j;
}

inline void write_loss_csv(const fs::path& path, const train::TrainerState& state) {
  io::CsvWriter w({"epoch", "lr", "total", "velocity_term", "misfit_term"});
  for (std::size_t e = 0; e < state.history.size(); ++e) {
    const auto& h = state.history[e];
    w.row({std::to_string(e), io::format_double(h[0]), io::format_double(h[1]), io::format_double(h[2]),
           io::format_double(h[3])});
  }
  w.save(path);
}

/// Trains from scratch (or from `resume`) and writes, under `out`:
/// data/{train,test}.dwnt, losses.csv, checkpoints/epoch_NNNN/ every
/// checkpoint_every epochs, and the final checkpoint/.
inline train::TrainerState run_train(const ExperimentConfig& cfg, const fs::path& out,
                                     const std::optional<fs::path>& resume = std::nullopt,
                                     std::ostream* log = &std::cout) {
  validate(cfg);
  const Corpus corpus = load_corpus(cfg.dataset);
  const auto op = make_operator(cfg.op);
  fs::create_directories(out / "data");
  io::serialize_tensor(corpus.train, out / "data" / "train.dwnt");
  if (!corpus.test.empty()) io::serialize_tensor(corpus.test, out / "data" / "test.dwnt");
  const Json context = checkpoint_context(cfg);

  train::TrainerState state;
  if (resume) {
    train::Checkpoint ck = train::load_checkpoint(*resume);
    if (!(ck.state.model->config() == cfg.model)) {
      throw ConfigError("model: configuration differs from the checkpoint in " + resume->string());
    }
    state = std::move(ck.state);
    if (state.epoch > cfg.train.max_epochs) {
      throw ConfigError("train.max_epochs: checkpoint is already at epoch " + std::to_string(state.epoch));
    }
  } else {
    state = train::init_state(cfg.model, cfg.train, *op, corpus.train);
  }
  if (log) {
    *log << "training " << nn::to_string(cfg.model.variant) << " (" << state.model->params().scalar_count()
         << " parameters) on " << corpus.train.dim(0) << " samples, epochs " << state.epoch << ".."
         << cfg.train.max_epochs << "\n";
  }
  train::train_until_done(state, corpus.train, *op, cfg.train, [&](const train::EpochReport& r, const train::TrainerState& s) {
    write_loss_csv(out / "losses.csv", s);
    if (log) {
      *log << "epoch " << r.epoch << " lr " << r.lr << " loss " << r.loss.total << " (velocity " << r.loss.velocity_term
           << ", misfit " << r.loss.misfit_term << ")\n";
    }
    if (cfg.train.checkpoint_every > 0 && s.epoch % cfg.train.checkpoint_every == 0) {
      train::save_checkpoint(out / "checkpoints" / indexed("epoch", s.epoch, ""), s, cfg.train, context);
    }
  });
  write_loss_csv(out / "losses.csv", state);
  train::save_checkpoint(out / "checkpoint", state, cfg.train, context);
  return state;
}

/// Reads a DWNT tensor or an IDX image file (detected by content).
inline Tensor load_input(const fs::path& path) {
  const io::Bytes bytes = io::read_file(path);
  if (bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4, io::kTensorMagic)) {
    return io::decode_tensor<double>(bytes, path.string());
  }
  return io::decode_idx(bytes, path.string());
}

/// Views `input` as a list of operator-domain samples.
inline Tensor as_samples(const Tensor& input, const Shape& domain) {
  const std::size_t d = shape_numel(domain);
  if (input.size() % d != 0) {
    throw ShapeError("input " + to_string(input.shape()) + " is not a list of samples of shape " + to_string(domain));
  }
  Shape s{input.size() / d};
  s.insert(s.end(), domain.begin(), domain.end());
  return input.reshaped(s);
}

struct InferOptions {
  double noise_pct = 5.0;
  std::size_t ensemble = 32;
  std::uint64_t seed = 0;
  /// Process only the first `limit` inputs when nonzero.
  std::size_t limit = 0;
  bool write_images = true;
};

struct LoadedModel {
  train::Checkpoint ck;
  OperatorConfig op_cfg;
  ops::OperatorPtr op;
  infer::InferenceConfig inference;
};

inline LoadedModel load_model(const fs::path& checkpoint) {
  LoadedModel m{train::load_checkpoint(checkpoint), {}, nullptr, {}};
  const Json& ctx = m.ck.context;
  if (!ctx.is_object() || !ctx.contains("operator")) {
    throw ConfigError("checkpoint context.operator: missing in " + checkpoint.string());
  }
  m.op_cfg = operator_config_from_json(ctx.at("operator"), "context.operator");
  m.op = make_operator(m.op_cfg);
  if (ctx.contains("inference")) m.inference = io::inference_config_from_json(ctx.at("inference"), "context.inference");
  return m;
}

/// Per input image i: b = A x + noise, then an M-member posterior ensemble.
/// Writes truth/b/atb/mean/std/samples tensors, PGM panels for 2D data, and
/// infer.csv with the noise level and ensemble spread per image.
inline void run_infer(const fs::path& checkpoint, const fs::path& input, const InferOptions& o, const fs::path& out,
                      std::ostream* log = &std::cout) {
  LoadedModel lm = load_model(checkpoint);
  auto& model = *lm.ck.state.model;
  const auto& op = *lm.op;
  const Tensor xs = as_samples(load_input(input), op.domain_shape());
  std::size_t n = xs.dim(0);
  if (o.limit > 0) n = std::min(n, o.limit);
  infer::InferenceConfig icfg = lm.inference;
  icfg.ensemble_size = o.ensemble;
  icfg.noise_percent = o.noise_pct;
  icfg.validate();
  fs::create_directories(out);
  const bool images = o.write_images && op.domain_shape().size() == 2;
  const SeededRng root(o.seed);
  io::CsvWriter summary({"image", "sigma", "spread"});
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor x = xs.slice(i);
    SeededRng noise_rng = root.stream(2 * i);
    const auto obs = flow::inject_noise(op, x, o.noise_pct, noise_rng, lm.ck.state.reference_range);
    icfg.seed = root.stream(2 * i + 1).next_u64();
    const infer::PosteriorEnsemble e = infer::posterior_ensemble(model, op, obs.b, icfg);
    const Tensor mean = e.mean.reshaped(op.domain_shape());
    const Tensor std = e.std.reshaped(op.domain_shape());
    const Tensor atb = op.adjoint(obs.b);
    io::serialize_tensor(x, out / indexed("truth", i, ".dwnt"));
    io::serialize_tensor(obs.b, out / indexed("b", i, ".dwnt"));
    io::serialize_tensor(atb, out / indexed("atb", i, ".dwnt"));
    io::serialize_tensor(mean, out / indexed("mean", i, ".dwnt"));
    io::serialize_tensor(std, out / indexed("std", i, ".dwnt"));
    io::serialize_tensor(e.samples, out / indexed("samples", i, ".dwnt"));
    if (images) {
      io::write_image(x, out / indexed("panel", i, "_truth.pgm"));
      io::write_image(io::normalize_for_display(obs.b), out / indexed("panel", i, "_input.pgm"));
      io::write_image(io::normalize_for_display(atb), out / indexed("panel", i, "_atb.pgm"));
      io::write_image(mean, out / indexed("panel", i, "_mean.pgm"));
      io::write_image(io::normalize_for_display(std), out / indexed("panel", i, "_std.pgm"));
    }
    summary.row({std::to_string(i), io::format_double(obs.sigma), io::format_double(e.spread)});
    if (log) *log << "image " << i << " sigma " << obs.sigma << " spread " << e.spread << "\n";
  }
  summary.save(out / "infer.csv");
}

/// Numbered files `<prefix>_NNNN.dwnt` in a directory, in index order.
inline std::vector<std::pair<std::size_t, fs::path>> numbered_files(const fs::path& dir, const std::string& prefix) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  const std::regex pattern(prefix + "_([0-9]+)\\.dwnt");
  std::vector<std::pair<std::size_t, fs::path>> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) out.emplace_back(std::stoul(m[1].str()), entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline void write_metric_csv(const eval::MetricReport& rep, const fs::path& path) {
  io::CsvWriter w({"image", "mse", "misfit", "misfit_normalized", "ssim", "psnr"});
  auto put = [&](const eval::MetricRow& r) {
    w.row({r.name, io::format_double(r.mse), io::format_double(r.misfit), io::format_double(r.misfit_normalized),
           io::format_double(r.ssim), io::format_double(r.psnr)});
  };
  for (const auto& r : rep.rows) put(r);
  put(rep.mean);
  put(rep.std);
  w.save(path);
}

/// Scores pred_dir/mean_NNNN.dwnt against truth_dir/truth_NNNN.dwnt. The
/// misfit uses pred_dir/b_NNNN.dwnt when present and A x_true otherwise.
inline eval::MetricReport run_eval(const fs::path& pred_dir, const fs::path& truth_dir, const OperatorConfig& op_cfg,
                                   const fs::path& csv, const std::string& pred_prefix = "mean") {
  const auto op = make_operator(op_cfg);
  const auto truths = numbered_files(truth_dir, "truth");
  if (truths.empty()) throw IoError("no truth_NNNN.dwnt files in " + truth_dir.string());
  std::vector<eval::MetricRow> rows;
  for (const auto& [i, tpath] : truths) {
    const fs::path ppath = pred_dir / indexed(pred_prefix.c_str(), i, ".dwnt");
    if (!fs::exists(ppath)) throw IoError("missing prediction " + ppath.string());
    const Tensor truth = io::deserialize_tensor(tpath).reshaped(op->domain_shape());
    const Tensor pred = io::deserialize_tensor(ppath);
    const fs::path bpath = pred_dir / indexed("b", i, ".dwnt");
    const Tensor b = fs::exists(bpath) ? io::deserialize_tensor(bpath) : op->apply(truth);
    rows.push_back(eval::evaluate_image(std::to_string(i), *op, truth, pred, b));
  }
  auto rep = eval::aggregate(std::move(rows));
  write_metric_csv(rep, csv);
  return rep;
}

struct DuathlonResult {
  Tensor prior;
  infer::PosteriorEnsemble posterior;
};

/// Prior and posterior sample CSVs for the two-lobe toy problem. Without a
/// checkpoint the default toy model is trained first under out/model.
inline DuathlonResult run_toy_duathlon(double b, double noise_pct, std::size_t samples, const fs::path& out,
                                       const std::optional<fs::path>& checkpoint = std::nullopt,
                                       std::uint64_t seed = 0, std::ostream* log = &std::cout) {
  if (samples < 1) throw ParameterError("toy-duathlon: --samples must be >= 1");
  fs::create_directories(out);
  fs::path ckpt;
  if (checkpoint) {
    ckpt = *checkpoint;
  } else {
    ExperimentConfig cfg = ExperimentConfig::duathlon();
    cfg.output_dir = (out / "model").string();
    run_train(cfg, out / "model", std::nullopt, log);
    ckpt = out / "model" / "checkpoint";
  }
  LoadedModel lm = load_model(ckpt);
  if (lm.op_cfg.kind != "sum") throw ConfigError("toy-duathlon: checkpoint was not trained on the sum operator");

  DuathlonResult r;
  SeededRng prior_rng = SeededRng(seed).stream(0);
  std::vector<int> comp;
  r.prior = data::sample_duathlon_prior(prior_rng, samples, {}, &comp);
  io::CsvWriter prior_csv({"x1", "x2", "component"});
  for (std::size_t i = 0; i < samples; ++i) {
    prior_csv.row({io::format_double(r.prior[2 * i]), io::format_double(r.prior[2 * i + 1]), std::to_string(comp[i])});
  }
  prior_csv.save(out / "prior_samples.csv");

  infer::InferenceConfig icfg = lm.inference;
  icfg.ensemble_size = samples;
  icfg.noise_percent = noise_pct;
  icfg.seed = SeededRng(seed).stream(1).next_u64();
  r.posterior = infer::posterior_ensemble(*lm.ck.state.model, *lm.op, Tensor::vector({b}), icfg);
  io::CsvWriter post_csv({"x1", "x2"});
  for (std::size_t i = 0; i < samples; ++i) {
    post_csv.row({io::format_double(r.posterior.samples[2 * i]), io::format_double(r.posterior.samples[2 * i + 1])});
  }
  post_csv.save(out / "posterior_samples.csv");
  if (log) {
    *log << "posterior mean (" << r.posterior.mean[0] << ", " << r.posterior.mean[1] << ") std (" << r.posterior.std[0]
         << ", " << r.posterior.std[1] << ")\n";
  }
  return r;
}

/// Dot-test, linearity and spectral report for one operator; returns the
/// exit status (0 when the dot test passes at 1e-9).
inline int run_op_test(const std::string& kind, std::size_t side, std::ostream& os, std::uint64_t seed = 0) {
  OperatorConfig c;
  c.kind = kind;
  c.side = side;
  if (kind != "blur" && kind != "radon" && kind != "sum") {
    throw ConfigError("--operator: expected blur, radon or sum, got \"" + kind + "\"");
  }
  const auto op = make_operator(c);
  SeededRng rng(seed);
  const double dot = ops::adjoint_dot_test(*op, rng, 20);
  const double lin = ops::linearity_error(*op, rng, 5);
  const double smax = ops::top_singular_value(*op, 100, rng);
  os << "operator " << op->name() << "\n";
  os << "domain " << to_string(op->domain_shape()) << " range " << to_string(op->range_shape()) << "\n";
  os << "adjoint_dot_test " << io::format_double(dot) << "\n";
  os << "linearity_error " << io::format_double(lin) << "\n";
  os << "top_singular_value " << io::format_double(smax) << "\n";
  const bool ok = dot < 1e-9;
  os << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? 0 : 1;
}

}  // namespace dawnfm::experiments
