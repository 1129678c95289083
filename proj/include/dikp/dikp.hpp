#pragma once

// Restoration through untrained generators: the image (and, blind, the
// kernel) is the output of a randomly initialized hourglass driven by a fixed
// noise input; the generator weights are fitted so that re-blurring the
// output reproduces the observation.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dikp/hourglass.hpp"
#include "dikp/image.hpp"

namespace dikp {

struct DikpConfig {
  nn::HourglassConfig image_net;
  nn::HourglassConfig kernel_net = nn::HourglassConfig::kernel_net();
  double lr = 0.01;
  std::size_t iters = 3000;
  double input_noise_scale = 0.1;  // z ~ U(0, input_noise_scale)
  double perturb_sigma = 0.03;     // fresh N(0, sigma^2) added to z every iteration
  std::uint64_t seed = 0;
  std::size_t track_every = 1;     // trace sampling stride

  /// Throws ConfigError.
  void validate() const;
};

struct DikpResult {
  Image image;
  std::optional<Kernel> kernel;  // blind only
  /// Energy mse(X * K, B) of the iterate, recorded at iterations 0,
  /// track_every, 2 * track_every, ...
  std::vector<double> trace;
  std::vector<std::size_t> trace_iters;
  /// Iteration whose parameters produced the returned outputs.
  std::size_t best_iter = 0;
  double best_energy = 0.0;
};

/// "iter,energy" with a header row.
std::string energy_trace_to_csv(const DikpResult& result);
void save_energy_trace_csv(const DikpResult& result, const std::filesystem::path& path);

/// Called after every blind iteration with the iteration index and the
/// kernel generated at that iteration.
using KernelObserver = std::function<void(std::size_t, const Kernel&)>;

/// Kernel-known restoration. `cfg.image_net` is adjusted to the shape of B
/// (channels, rows, cols). Throws DivergenceError on a non-finite energy and
/// ConfigError when B does not fit the generator.
DikpResult dikp_deconv(const Image& b, const Kernel& k, const DikpConfig& cfg);

/// Joint image and kernel restoration with one Adam step over both
/// generators per iteration. The kernel size comes from cfg.kernel_net.
DikpResult dikp_blind(const Image& b, const DikpConfig& cfg, const KernelObserver& observer = {});

struct ConvergenceTrace {
  std::string label;
  std::vector<double> energy;  // one value per iteration
};

/// Degrades each target with (k, sigma = 0.01, noise seed `cfg.seed`) and
/// fits it with dikp_deconv under identical settings; traces are aligned.
std::vector<ConvergenceTrace> convergence_bias_experiment(
    const std::vector<std::pair<std::string, Image>>& targets, const Kernel& k, const DikpConfig& cfg);

/// N(0, 1) samples clamped into [0, 1]; the returned image has clamped() set.
Image gaussian_noise_image(std::size_t channels, std::size_t rows, std::size_t cols, std::uint64_t seed);
/// U(0, 1) samples.
Image uniform_noise_image(std::size_t channels, std::size_t rows, std::size_t cols, std::uint64_t seed);

}  // namespace dikp
