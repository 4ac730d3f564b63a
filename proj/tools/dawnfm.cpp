#include <CLI11.hpp>

#include <iostream>

#include "dawnfm/experiments/run.hpp"

using namespace dawnfm;
namespace fs = std::filesystem;

namespace {

// Accepts a bare operator object or a full experiment config.
experiments::OperatorConfig load_operator_config(const fs::path& path) {
  const auto bytes = io::read_file(path);
  io::Json j;
  try {
    j = io::Json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (j.is_object() && j.contains("operator")) return experiments::experiment_config_from_json(j).op;
  return experiments::operator_config_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DAWN-FM: data-aware, noise-informed flow matching for linear inverse problems"};
  app.require_subcommand(1);

  std::string config, out, resume;
  auto* train = app.add_subcommand("train", "train a velocity model from a JSON experiment config");
  train->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out, "output directory (overrides output_dir)");
  train->add_option("--resume", resume, "checkpoint directory to continue from")->check(CLI::ExistingDirectory);

  std::string checkpoint, input;
  experiments::InferOptions io_opts;
  auto* infer = app.add_subcommand("infer", "posterior ensembles for a set of clean inputs");
  infer->add_option("--checkpoint", checkpoint, "checkpoint directory")->required()->check(CLI::ExistingDirectory);
  infer->add_option("--input", input, "DWNT tensor or IDX image file")->required()->check(CLI::ExistingFile);
  infer->add_option("--noise-pct", io_opts.noise_pct, "observation noise in percent of the data range")
      ->check(CLI::Range(0.0, 20.0));
  infer->add_option("--ensemble", io_opts.ensemble, "ensemble size M")->check(CLI::PositiveNumber);
  infer->add_option("--seed", io_opts.seed, "seed for noise and x0 draws");
  infer->add_option("--limit", io_opts.limit, "process only the first N inputs");
  infer->add_option("--out", out, "output directory")->required();

  std::string pred, truth, op_path, csv;
  auto* eval = app.add_subcommand("eval", "metrics of ensemble means against ground truth");
  eval->add_option("--pred", pred, "directory with mean_NNNN.dwnt")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--truth", truth, "directory with truth_NNNN.dwnt")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--operator", op_path, "operator or experiment config (JSON)")->required()->check(CLI::ExistingFile);
  eval->add_option("--csv", csv, "metrics CSV to write")->required();

  double b = 6.0, toy_pct = 2.0;
  std::size_t samples = 200;
  std::uint64_t toy_seed = 0;
  std::string toy_ckpt;
  auto* toy = app.add_subcommand("toy-duathlon", "two-lobe prior observed through x1 + x2");
  toy->add_option("--b", b, "observed sum")->required();
  toy->add_option("--noise-pct", toy_pct, "noise percent")->check(CLI::Range(0.0, 20.0));
  toy->add_option("--samples", samples, "prior and posterior sample count")->check(CLI::PositiveNumber);
  toy->add_option("--out", out, "output directory")->required();
  toy->add_option("--checkpoint", toy_ckpt, "trained toy model (trains one when omitted)")
      ->check(CLI::ExistingDirectory);
  toy->add_option("--seed", toy_seed, "sampling seed");

  std::string kind;
  std::size_t side = 16;
  auto* optest = app.add_subcommand("op-test", "adjoint and spectral diagnostics of a forward operator");
  optest->add_option("--operator", kind, "blur, radon or sum")->required()->check(CLI::IsMember({"blur", "radon", "sum"}));
  optest->add_option("--side", side, "image side")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      const auto cfg = experiments::load_experiment_config(config);
      const fs::path dir = out.empty() ? fs::path(cfg.output_dir) : fs::path(out);
      experiments::run_train(cfg, dir, resume.empty() ? std::nullopt : std::optional<fs::path>(resume));
    } else if (infer->parsed()) {
      experiments::run_infer(checkpoint, input, io_opts, out);
    } else if (eval->parsed()) {
      const auto rep = experiments::run_eval(pred, truth, load_operator_config(op_path), csv);
      std::cout << "images " << rep.rows.size() << " mse " << rep.mean.mse << " psnr " << rep.mean.psnr << " ssim "
                << rep.mean.ssim << "\n";
    } else if (toy->parsed()) {
      experiments::run_toy_duathlon(b, toy_pct, samples, out,
                                    toy_ckpt.empty() ? std::nullopt : std::optional<fs::path>(toy_ckpt), toy_seed);
    } else if (optest->parsed()) {
      return experiments::run_op_test(kind, side, std::cout);
    }
  } catch (const dawnfm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
