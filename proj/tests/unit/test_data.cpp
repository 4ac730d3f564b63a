#include "dawnfm/data/datasets.hpp"
#include "helpers.hpp"

using namespace dawnfm;
using namespace dawnfm::data;

TEST(Phantoms, RangeBordersAndSeed) {
  SeededRng a(3), b(3);
  const Tensor p = gen_phantoms(a, 50, 16);
  EXPECT_EQ(p, gen_phantoms(b, 50, 16));
  ASSERT_EQ(p.shape(), (Shape{50, 16, 16}));
  EXPECT_GE(min_value(p), 0.0);
  EXPECT_LE(max_value(p), 1.0);
  for (std::size_t i = 0; i < 50; ++i) {
    const Tensor img = p.slice(i);
    EXPECT_GT(max_value(img), 0.19) << i;
    for (std::size_t k = 0; k < 16; ++k) {
      EXPECT_EQ(img.at(0, k), 0.0);
      EXPECT_EQ(img.at(15, k), 0.0);
      EXPECT_EQ(img.at(k, 0), 0.0);
      EXPECT_EQ(img.at(k, 15), 0.0);
    }
  }
  SeededRng c(4);
  EXPECT_NE(gen_phantoms(c, 50, 16), p);
}

TEST(Phantoms, RejectsSmallSide) {
  SeededRng rng(1);
  EXPECT_THROW(gen_phantoms(rng, 1, 7), ParameterError);
}

TEST(Duathlon, MixtureMomentsAndFrequencies) {
  SeededRng rng(5);
  std::vector<int> comp;
  const std::size_t n = 100000;
  const Tensor s = sample_duathlon_prior(rng, n, DuathlonPrior{}, &comp);
  double m0 = 0, m1 = 0, ones = 0;
  for (std::size_t i = 0; i < n; ++i) {
    m0 += s[2 * i];
    m1 += s[2 * i + 1];
    ones += comp[i];
  }
  EXPECT_NEAR(m0 / n, 2.0, 0.02);
  EXPECT_NEAR(m1 / n, 2.0, 0.02);
  EXPECT_NEAR(ones / n, 0.5, 0.01);
  SeededRng r1(9), r2(9);
  EXPECT_EQ(sample_duathlon_prior(r1, 10), sample_duathlon_prior(r2, 10));
}

TEST(Duathlon, PriorValidation) {
  DuathlonPrior p;
  p.weights = {0.7, 0.7};
  EXPECT_THROW(p.validate(), ConfigError);
  p = DuathlonPrior{};
  p.stds[1] = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  SeededRng rng(1);
  EXPECT_THROW(sample_duathlon_prior(rng, 0), ParameterError);
}
