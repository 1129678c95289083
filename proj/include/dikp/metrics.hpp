#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dikp/image.hpp"

namespace dikp {

/// (1 / (d m n)) * ||a - b||^2. Throws ShapeError on mismatched shapes.
double mse(const Image& a, const Image& b);

/// 10 log10(peak^2 / mse(x, ref)); +infinity when the images are identical.
double psnr(const Image& x, const Image& ref, double peak = 1.0);

/// Forward differences with a zero last column / last row (Neumann boundary).
/// `x` is one rows x cols plane in row-major order.
std::vector<double> grad_h(std::span<const double> x, std::size_t rows, std::size_t cols);
std::vector<double> grad_v(std::span<const double> x, std::size_t rows, std::size_t cols);

/// Isotropic total variation, summed over channels.
double tv_norm(const Image& x);
double l1_norm(std::span<const double> values);

/// Probability mass of pooled horizontal and vertical gradients over 64
/// equal bins of [-1, 1]. Bins are half-open [e_k, e_{k+1}) except the last,
/// which also holds 1.0; values outside [-1, 1] are not counted.
struct GradientHistogram {
  static constexpr std::size_t kBins = 64;
  std::array<double, kBins + 1> edges{};
  std::array<double, kBins> probs{};
  std::size_t counted = 0;
  std::size_t dropped = 0;

  double bin_center(std::size_t b) const { return 0.5 * (edges[b] + edges[b + 1]); }
};

GradientHistogram gradient_histogram(std::span<const Image> images);

/// Floor applied to the reference distribution q inside kl_divergence.
inline constexpr double kKlEpsilon = 1e-12;

/// sum_b p(b) log(p(b) / max(q(b), eps)) over bins with p(b) > 0.
double kl_divergence(std::span<const double> p, std::span<const double> q,
                     double eps = kKlEpsilon);
double kl_divergence(const GradientHistogram& p, const GradientHistogram& q,
                     double eps = kKlEpsilon);

/// CSV with header "bin_center,probability".
std::string histogram_to_csv(const GradientHistogram& h);
void save_histogram_csv(const GradientHistogram& h, const std::filesystem::path& path);

}  // namespace dikp
