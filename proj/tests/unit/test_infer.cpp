#include <cmath>

#include "dawnfm/infer/ensemble.hpp"
#include "dawnfm/nn/model.hpp"
#include "dawnfm/ops/blur.hpp"
#include "dawnfm/ops/sum.hpp"
#include "helpers.hpp"

using namespace dawnfm;
using namespace dawnfm::infer;

TEST(Rk4, ExactForConstantAndLinearInTimeFields) {
  const Tensor x0 = Tensor::vector({1.0, -2.0});
  const Tensor v = Tensor::vector({0.5, 3.0});
  const Tensor x1 = rk4_integrate([&](const Tensor&, double) { return v; }, x0, 7);
  EXPECT_LT(max_abs_diff(x1, x0 + v), 1e-14);
  // dx/dt = t integrates to 1/2 exactly.
  const Tensor y = rk4_integrate([](const Tensor& x, double t) { return Tensor(x.shape(), t); }, Tensor({1}), 3);
  EXPECT_NEAR(y[0], 0.5, 1e-15);
}

TEST(Rk4, FourthOrderConvergence) {
  auto field = [](const Tensor& x, double) { return x; };
  const Tensor one = Tensor::vector({1.0});
  const double e10 = std::abs(rk4_integrate(field, one, 10)[0] - std::exp(1.0));
  const double e20 = std::abs(rk4_integrate(field, one, 20)[0] - std::exp(1.0));
  EXPECT_NEAR(std::log2(e10 / e20), 4.0, 0.15);
  EXPECT_LT(std::abs(rk4_integrate(field, one, 100)[0] - std::exp(1.0)), 1e-9);
}

TEST(Rk4, Errors) {
  auto field = [](const Tensor& x, double) { return x; };
  EXPECT_THROW(rk4_integrate(field, Tensor({1}), 0), ParameterError);
  auto blowup = [](const Tensor& x, double) { return Tensor(x.shape(), std::numeric_limits<double>::infinity()); };
  EXPECT_THROW(rk4_integrate(blowup, Tensor({1}), 2), InferenceError);
}

TEST(Summarize, MeanStdAndSpread) {
  const auto e = summarize(Tensor({2, 2}, {0.0, 1.0, 2.0, 1.0}));
  EXPECT_EQ(e.mean, Tensor::vector({1.0, 1.0}));
  EXPECT_EQ(e.std, Tensor::vector({1.0, 0.0}));
  EXPECT_DOUBLE_EQ(e.spread, 1.0);
  const auto one = summarize(Tensor({1, 3}, {1, 2, 3}));
  EXPECT_EQ(max_value(one.std), 0.0);
}

TEST(Posterior, DeterministicForSeedAndShaped) {
  ops::GaussianBlurOperator op(8);
  auto m = nn::make_model(nn::ModelConfig::unet_for(1, 8, true), 2);
  SeededRng rng(1);
  const Tensor b = testutil::random_tensor(rng, {8, 8}, 0, 1);
  InferenceConfig cfg;
  cfg.ensemble_size = 3;
  cfg.n_steps = 5;
  cfg.noise_percent = 5.0;
  cfg.seed = 11;
  const auto a = posterior_ensemble(*m, op, b, cfg);
  const auto again = posterior_ensemble(*m, op, b, cfg);
  EXPECT_EQ(a.samples, again.samples);
  EXPECT_EQ(a.samples.shape(), (Shape{3, 1, 8, 8}));
  EXPECT_EQ(a.mean.shape(), (Shape{1, 8, 8}));
  cfg.seed = 12;
  EXPECT_NE(posterior_ensemble(*m, op, b, cfg).samples, a.samples);
  cfg.noise_percent = 25.0;
  EXPECT_THROW(posterior_ensemble(*m, op, b, cfg), ConfigError);
  cfg.noise_percent = 5.0;
  EXPECT_THROW(posterior_ensemble(*m, op, Tensor({4, 4}), cfg), ShapeError);
}

TEST(Posterior, NoiseBlindModelIgnoresNoisePercent) {
  ops::SumOperator op;
  auto m = nn::make_model(nn::ModelConfig::toy_mlp(false), 3);
  InferenceConfig cfg;
  cfg.ensemble_size = 4;
  cfg.n_steps = 4;
  cfg.noise_percent = 2.0;
  const auto a = posterior_ensemble(*m, op, Tensor::vector({6.0}), cfg);
  cfg.noise_percent = 10.0;
  EXPECT_EQ(posterior_ensemble(*m, op, Tensor::vector({6.0}), cfg).samples, a.samples);
}
