#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "dikp/image.hpp"

namespace dikp {

enum class KernelKind { Gaussian, Defocus, Motion };

std::string_view to_string(KernelKind kind);
/// Accepts "gaussian", "defocus", "motion"; throws ConfigError otherwise.
KernelKind parse_kernel_kind(std::string_view name);

/// Parameters of a synthetic blur kernel. Fields not used by `kind` are ignored.
struct KernelSpec {
  KernelKind kind = KernelKind::Gaussian;
  std::size_t rows = 9;
  std::size_t cols = 9;
  KernelCenter center{4, 4};
  double sigma_row = 2.0;  // Gaussian widths
  double sigma_col = 2.0;
  double radius = 4.0;                          // defocus disk radius, pixels
  double amplitude = 5.656854249492381;         // motion half-length, pixels
  double angle = 2.356194490192345;             // motion direction, radians

  /// Defaults used throughout the experiments for an h x w support: centered,
  /// widths 2.0, radius floor(min(h/2, w/2)), amplitude sqrt(2) times that
  /// radius, angle 3*pi/4.
  static KernelSpec defaults(KernelKind kind, std::size_t rows = 9, std::size_t cols = 9);
};

struct DegradationSpec {
  KernelSpec kernel;
  double sigma = 0.01;
  std::uint64_t seed = 0;
};

Kernel gaussian_kernel(const KernelSpec& spec);
Kernel defocus_kernel(const KernelSpec& spec);

/// Line-segment PSF of half-length `amplitude` along `angle` (row offset
/// ~ cos, column offset ~ sin). The segment is rasterized with one sample per
/// unit step along its major axis, n = floor(amplitude * max(|cos|, |sin|))
/// steps each side of the center, rounded to the nearest lattice cell and
/// given equal weight; samples outside the support are dropped before
/// normalization.
Kernel motion_kernel(const KernelSpec& spec);

Kernel make_kernel(const KernelSpec& spec);

/// Per-channel correlation with the kernel anchored at its center, reflexive
/// (half-sample symmetric) boundary; output shape equals input shape.
/// Throws ShapeError if the kernel is larger than the image.
Image convolve(const Image& img, const Kernel& k);

/// B = convolve(X, K) + E with E ~ N(0, sigma^2) i.i.d. from Rng(seed).
/// The result is not clamped.
Image degrade(const Image& img, const Kernel& k, double sigma, std::uint64_t seed);
Image degrade(const Image& img, const DegradationSpec& spec);

/// Row-major CSV, one kernel row per line, 17 significant digits.
std::string kernel_to_csv(const Kernel& k);
void save_kernel_csv(const Kernel& k, const std::filesystem::path& path);
/// Reads a kernel CSV; the center is taken as (rows / 2, cols / 2) and the
/// weights are renormalized.
Kernel load_kernel_csv(const std::filesystem::path& path);

}  // namespace dikp
