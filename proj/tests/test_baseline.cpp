#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dikp/baseline.hpp"
#include "dikp/degrade.hpp"
#include "dikp/error.hpp"
#include "dikp/metrics.hpp"
#include "dikp/rng.hpp"
#include "oracles.hpp"
#include "tv_reference.hpp"

using namespace dikp;
using namespace dikp::baseline;

namespace {

Image smooth_image(Rng& rng, std::size_t c, std::size_t m, std::size_t n) {
  // Blocky random pattern so TV has something to preserve.
  Image img(c, m, n);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < m; i += 4)
      for (std::size_t j = 0; j < n; j += 4) {
        const double v = rng.uniform();
        for (std::size_t a = i; a < std::min(m, i + 4); ++a)
          for (std::size_t b = j; b < std::min(n, j + 4); ++b) img(ch, a, b) = v;
      }
  return img;
}

}  // namespace

TEST(ProjectSimplex, KnownCases) {
  EXPECT_EQ(project_simplex(std::vector<double>{0.2, 0.8}), (std::vector<double>{0.2, 0.8}));
  const auto w = project_simplex(std::vector<double>{2.0, 0.0, 0.0});
  EXPECT_EQ(w, (std::vector<double>{1.0, 0.0, 0.0}));
  const auto u = project_simplex(std::vector<double>{-5.0, -5.0, -5.0, -5.0});
  for (double x : u) EXPECT_DOUBLE_EQ(x, 0.25);
  // Uniform shifts do not change the projection.
  const auto a = project_simplex(std::vector<double>{0.3, 0.1, 0.9});
  const auto b = project_simplex(std::vector<double>{-0.7, -0.9, -0.1});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
}

TEST(ProjectSimplex, SatisfiesOptimalityConditions) {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(81);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    const auto w = project_simplex(v);
    EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
    // KKT: v - w = theta on the support, v - w <= theta off it.
    double theta = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
      if (w[i] > 0) theta = v[i] - w[i];
    for (std::size_t i = 0; i < w.size(); ++i) {
      EXPECT_GE(w[i], 0.0);
      if (w[i] > 0) EXPECT_NEAR(v[i] - w[i], theta, 1e-12);
      else EXPECT_LE(v[i], theta + 1e-12);
    }
  }
}

TEST(TvProx, ReducesProxObjective) {
  Rng rng(2);
  const Image v = smooth_image(rng, 1, 12, 12);
  Image noisy = v;
  for (double& x : noisy.values()) x += 0.1 * (rng.uniform() - 0.5);
  const double lambda = 0.05;
  auto objective = [&](const Image& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += 0.5 * std::pow(x.values()[i] - noisy.values()[i], 2);
    return s + lambda * tv_norm(x);
  };
  const double f0 = objective(noisy);
  const double f20 = objective(tv_prox(noisy, lambda, 20));
  const double f200 = objective(tv_prox(noisy, lambda, 200));
  EXPECT_LT(f20, f0);
  EXPECT_LE(f200, f20 + 1e-12);
}

TEST(TvDeconv, TinyAlphaDeltaRecoversObservation) {
  Rng rng(3);
  const Image b = smooth_image(rng, 1, 16, 16);
  auto cfg = BaselineConfig::kernel_known();
  cfg.alpha = 1e-8;
  const auto r = tv_deconv(b, Kernel::delta(9, 9, {4, 4}), cfg);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(r.image.values()[i], b.values()[i], 1e-4);
}

TEST(TvDeconv, HugeAlphaFlattens) {
  Rng rng(4);
  const Image x = smooth_image(rng, 1, 16, 16);
  const Image b = degrade(x, make_kernel(KernelSpec::defaults(KernelKind::Gaussian)), 0.01, 1);
  auto cfg = BaselineConfig::kernel_known();
  cfg.alpha = 1e3;
  const auto r = tv_deconv(b, make_kernel(KernelSpec::defaults(KernelKind::Gaussian)), cfg);
  EXPECT_LT(tv_norm(r.image), 1e-3 * tv_norm(b));
}

TEST(TvDeconv, TraceIsMonotone) {
  Rng rng(5);
  for (auto kind : {KernelKind::Gaussian, KernelKind::Defocus, KernelKind::Motion}) {
    const Kernel k = make_kernel(KernelSpec::defaults(kind));
    const Image b = degrade(smooth_image(rng, 3, 24, 20), k, 0.01, 2);
    for (double alpha : {2e-2, 1e-3, 1e-5}) {
      auto cfg = BaselineConfig::kernel_known();
      cfg.alpha = alpha;
      const auto r = tv_deconv(b, k, cfg);
      ASSERT_EQ(r.trace.objective.size(), cfg.inner_iters_x);
      for (std::size_t i = 1; i < r.trace.objective.size(); ++i)
        EXPECT_LE(r.trace.objective[i], r.trace.objective[i - 1]);
      EXPECT_DOUBLE_EQ(r.trace.objective.back(), tv_objective(b, k, r.image, alpha));
    }
  }
}

TEST(TvDeconv, MatchesLongRunReference) {
  for (std::uint64_t seed : {6u, 7u}) {
    Rng rng(seed);
    const Kernel k = make_kernel(KernelSpec::defaults(KernelKind::Gaussian, 5, 5));
    const Image b = degrade(smooth_image(rng, 1, 16, 16), k, 0.01, seed);
    const double alpha = 1e-3;
    oracle::TvReference ref(b, k, alpha);
    const double f_ref = tv_objective(b, k, ref.run(100000, 5), alpha);

    auto cfg = BaselineConfig::kernel_known();
    cfg.alpha = alpha;
    cfg.inner_iters_x = 3000;
    const auto r = tv_deconv(b, k, cfg);
    const double f = r.trace.objective.back();
    EXPECT_NEAR(f, f_ref, 1e-6) << "seed " << seed;
  }
}

TEST(TvDeconv, InsensitiveToInitialization) {
  Rng rng(8);
  const Kernel k = make_kernel(KernelSpec::defaults(KernelKind::Defocus, 5, 5));
  const Image b = degrade(smooth_image(rng, 1, 16, 16), k, 0.01, 3);
  auto cfg = BaselineConfig::kernel_known();
  cfg.alpha = 1e-3;
  cfg.inner_iters_x = 2000;
  const auto from_b = tv_deconv(b, k, cfg);
  const auto from_zero = tv_deconv(b, k, cfg, Image(1, 16, 16, 0.0));
  for (std::size_t i = 0; i < b.size(); ++i)
    EXPECT_NEAR(from_b.image.values()[i], from_zero.image.values()[i], 5e-3);
}

TEST(TvDeconv, StepSizeModesAgree) {
  Rng rng(9);
  const Kernel k = make_kernel(KernelSpec::defaults(KernelKind::Motion));
  const double fixed = data_lipschitz(k, 1, 20, 20, StepSizeMode::Fixed, 0);
  const double power = data_lipschitz(k, 1, 20, 20, StepSizeMode::PowerIteration, 20);
  EXPECT_GT(power, 0.0);
  EXPECT_LE(power, fixed * 1.01 + 1e-15);
}

TEST(TvDeconv, ShapeChecks) {
  EXPECT_THROW(tv_deconv(Image(1, 4, 4), Kernel::delta(9, 9, {4, 4}), BaselineConfig::kernel_known()), ShapeError);
  EXPECT_THROW(tv_deconv(Image(1, 16, 16), Kernel::delta(3, 3, {1, 1}), BaselineConfig::kernel_known(), Image(1, 8, 8)),
               ShapeError);
}

TEST(BlindTvL1, KernelStaysInSimplexEveryRound) {
  Rng rng(10);
  const Kernel truth = make_kernel(KernelSpec::defaults(KernelKind::Motion));
  const Image b = degrade(smooth_image(rng, 1, 24, 24), truth, 0.01, 4);
  auto cfg = BaselineConfig::blind();
  cfg.inner_iters_x = 20;
  cfg.inner_iters_k = 50;
  for (std::size_t rounds = 1; rounds <= 3; ++rounds) {
    cfg.outer_iters = rounds;
    const auto r = blind_tv_l1(b, cfg, Kernel::uniform(9, 9, {4, 4}));
    ASSERT_EQ(r.trace.objective.size(), rounds);
    double s = 0.0;
    for (double v : r.kernel.values()) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
    for (double v : r.trace.objective) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(BaselineConfig, Validation) {
  auto cfg = BaselineConfig::blind();
  EXPECT_NO_THROW(cfg.validate());
  cfg.alpha = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = BaselineConfig::kernel_known();
  cfg.inner_iters_x = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(SolverTrace, CsvSchema) {
  SolverTrace t{{3.0, 2.0}, {0.1, 0.2}};
  const auto csv = trace_to_csv(t);
  EXPECT_EQ(csv.rfind("iter,objective,seconds\n1,3,", 0), 0u);
}
