#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dikp/image.hpp"

namespace dikp::baseline {

enum class StepSizeMode {
  Fixed,           // ||A||^2 <= ||A||_1 ||A||_inf, exact column/row sums
  PowerIteration,  // power-iteration estimate of ||A||^2
};

struct BaselineConfig {
  double alpha = 2e-2;             // TV weight
  double beta = 5.0;               // L1 kernel weight (blind only)
  std::size_t outer_iters = 20;    // blind alternation rounds
  std::size_t inner_iters_x = 100; // MFISTA steps per image update
  std::size_t inner_iters_k = 200; // projected-gradient steps per kernel update
  std::size_t prox_iters = 20;     // dual iterations per TV proximal step
  StepSizeMode step_size_mode = StepSizeMode::PowerIteration;
  std::size_t power_iters = 20;

  static BaselineConfig kernel_known();
  static BaselineConfig blind();
  void validate() const;
};

/// Objective value and elapsed wall time after each iteration (kernel-known)
/// or each alternation round (blind).
struct SolverTrace {
  std::vector<double> objective;
  std::vector<double> seconds;
};

/// "iter,objective,seconds" with a header row.
std::string trace_to_csv(const SolverTrace& trace);
void save_trace_csv(const SolverTrace& trace, const std::filesystem::path& path);

/// Adjoint of X -> convolve(X, k) under the reflexive boundary.
Image adjoint_convolve(const Image& img, const Kernel& k);

/// Dual variables of the TV proximal problem; reusing them across calls
/// warm-starts the dual iteration.
struct TvDual {
  std::vector<double> p;  // horizontal
  std::vector<double> q;  // vertical
};

/// argmin_x 0.5 ||x - v||^2 + lambda * tv_norm(x), approximated with `iters`
/// fast gradient-projection steps on the dual (unit-ball constraint per pixel).
Image tv_prox(const Image& v, double lambda, std::size_t iters, TvDual* warm = nullptr);

/// Euclidean projection onto {w >= 0, sum w = 1}.
std::vector<double> project_simplex(std::span<const double> v);

/// mse(convolve(x, k), b) + alpha * tv_norm(x)
double tv_objective(const Image& b, const Kernel& k, const Image& x, double alpha);

/// Lipschitz constant of the gradient of X -> mse(convolve(X, k), b).
double data_lipschitz(const Kernel& k, std::size_t channels, std::size_t rows, std::size_t cols,
                      StepSizeMode mode, std::size_t power_iters);

struct TvResult {
  Image image;
  SolverTrace trace;
};

/// Monotone FISTA on mse(X * K, B) + alpha ||X||_TV, running
/// cfg.inner_iters_x iterations from `init` (B when absent). The returned
/// image is the monotone iterate, i.e. the best objective seen.
/// Throws DivergenceError if the objective stays non-finite after step halving.
TvResult tv_deconv(const Image& b, const Kernel& k, const BaselineConfig& cfg,
                   const std::optional<Image>& init = std::nullopt);

struct BlindResult {
  Image image;
  Kernel kernel;
  SolverTrace trace;
};

/// Alternating minimization of mse(X * K, B) + alpha ||X||_TV + beta ||K||_1
/// with K restricted to the probability simplex. Each round runs
/// cfg.inner_iters_x MFISTA steps on X and cfg.inner_iters_k proximal
/// gradient steps on K; X starts at B.
BlindResult blind_tv_l1(const Image& b, const BaselineConfig& cfg, const Kernel& init_k);

}  // namespace dikp::baseline
