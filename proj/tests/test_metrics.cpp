#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dikp/error.hpp"
#include "dikp/metrics.hpp"
#include "dikp/rng.hpp"
#include "oracles.hpp"

using namespace dikp;

namespace {

Image random_image(Rng& rng, std::size_t c, std::size_t m, std::size_t n) {
  std::vector<double> v(c * m * n);
  for (double& x : v) x = rng.uniform();
  return Image(c, m, n, std::move(v));
}

}  // namespace

TEST(Mse, KnownValues) {
  const Image a(1, 2, 2, 0.0);
  const Image b(1, 2, 2, std::vector<double>{0.1, 0.2, 0.3, 0.4});
  EXPECT_NEAR(mse(a, b), (0.01 + 0.04 + 0.09 + 0.16) / 4.0, 1e-17);
  EXPECT_THROW(mse(a, Image(1, 2, 3)), ShapeError);
}

TEST(Psnr, KnownValuesAndIdentity) {
  const Image a(1, 4, 4, 0.5);
  EXPECT_EQ(psnr(a, a), std::numeric_limits<double>::infinity());
  const Image b(1, 4, 4, 0.6);
  EXPECT_NEAR(psnr(b, a), 20.0, 1e-9);  // mse = 0.01
}

TEST(Gradients, ForwardDifferencesWithZeroBoundary) {
  const std::vector<double> x{1, 2, 4, 7, 11, 16};  // 2 x 3
  EXPECT_EQ(grad_h(x, 2, 3), (std::vector<double>{1, 2, 0, 4, 5, 0}));
  EXPECT_EQ(grad_v(x, 2, 3), (std::vector<double>{6, 9, 12, 0, 0, 0}));
}

TEST(TvNorm, MatchesOracleAndConstantIsZero) {
  Rng rng(1);
  for (int t = 0; t < 10; ++t) {
    const Image x = random_image(rng, 3, 7, 9);
    EXPECT_NEAR(tv_norm(x), oracle::tv(x), 1e-12);
  }
  EXPECT_EQ(tv_norm(Image(2, 5, 5, 0.3)), 0.0);
}

TEST(L1Norm, Basic) {
  const std::vector<double> v{-1.0, 2.0, -0.5};
  EXPECT_EQ(l1_norm(v), 3.5);
}

TEST(Histogram, EdgesAndNormalization) {
  Rng rng(2);
  std::vector<Image> imgs{random_image(rng, 1, 16, 16), random_image(rng, 3, 8, 8)};
  const auto h = gradient_histogram(imgs);
  EXPECT_EQ(h.edges.front(), -1.0);
  EXPECT_EQ(h.edges.back(), 1.0);
  for (std::size_t k = 0; k < GradientHistogram::kBins; ++k) EXPECT_NEAR(h.edges[k + 1] - h.edges[k], 1.0 / 32.0, 1e-15);
  EXPECT_NEAR(std::accumulate(h.probs.begin(), h.probs.end(), 0.0), 1.0, 1e-12);
  for (double p : h.probs) EXPECT_GE(p, 0.0);
  EXPECT_EQ(h.counted, 2u * (16 * 16) + 3u * 2 * (8 * 8));
  EXPECT_EQ(h.dropped, 0u);
}

TEST(Histogram, BinPlacement) {
  // Horizontal gradients 1.0 (top bin) and 0 (bin 32); vertical all zero.
  const Image x(1, 1, 2, std::vector<double>{0.0, 1.0});
  const auto h = gradient_histogram(std::vector<Image>{x});
  EXPECT_EQ(h.counted, 4u);
  EXPECT_DOUBLE_EQ(h.probs[63], 0.25);
  EXPECT_DOUBLE_EQ(h.probs[32], 0.75);
}

TEST(Histogram, OutOfRangeDropped) {
  const Image x(1, 1, 2, std::vector<double>{-0.5, 1.5});
  const auto h = gradient_histogram(std::vector<Image>{x});
  EXPECT_EQ(h.dropped, 1u);
  EXPECT_EQ(h.counted, 3u);
}

TEST(Histogram, EmptySetThrows) {
  EXPECT_THROW(gradient_histogram(std::vector<Image>{}), ValueError);
}

TEST(KlDivergence, SelfIsZeroAndKnownValue) {
  Rng rng(3);
  const auto h = gradient_histogram(std::vector<Image>{random_image(rng, 1, 32, 32)});
  EXPECT_EQ(kl_divergence(h, h), 0.0);
  const std::vector<double> p{0.5, 0.5}, q{0.25, 0.75};
  EXPECT_NEAR(kl_divergence(p, q), 0.5 * std::log(2.0) + 0.5 * std::log(0.5 / 0.75), 1e-15);
  const std::vector<double> r{1.0, 0.0};
  EXPECT_NEAR(kl_divergence(p, r), 0.5 * std::log(0.5 / 1.0) + 0.5 * std::log(0.5 / kKlEpsilon), 1e-9);
  EXPECT_THROW(kl_divergence(p, std::vector<double>{1.0}), ShapeError);
}

TEST(Histogram, CsvHasHeaderAndBins) {
  Rng rng(4);
  const auto csv = histogram_to_csv(gradient_histogram(std::vector<Image>{random_image(rng, 1, 4, 4)}));
  EXPECT_EQ(csv.rfind("bin_center,probability\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 65);
}
