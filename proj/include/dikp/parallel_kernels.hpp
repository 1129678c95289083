#pragma once

// OpenMP data-parallel inner loops. Every kernel parallelizes over disjoint
// output elements and keeps a fixed summation order per element, so results
// are bit-identical for any thread count. Straightforward serial versions of
// the same maps live in reference/ and are used by tests and benchmarks.

#include <cstddef>
#include <span>

namespace dikp::par {

/// Half-sample symmetric extension: -1 -> 0, -2 -> 1, n -> n-1. Periodic with
/// period 2n, so any integer offset maps into [0, n).
inline std::size_t reflect_index(std::ptrdiff_t idx, std::size_t n) noexcept {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  std::ptrdiff_t r = idx % period;
  if (r < 0) r += period;
  if (r >= static_cast<std::ptrdiff_t>(n)) r = period - 1 - r;
  return static_cast<std::size_t>(r);
}

struct PlaneDims {
  std::size_t channels = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t plane() const noexcept { return rows * cols; }
  std::size_t size() const noexcept { return channels * rows * cols; }
};

/// Small 2-D filter anchored at (center_row, center_col); shared by all channels.
struct FilterView {
  std::span<const double> taps;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t center_row = 0;
  std::size_t center_col = 0;
};

/// out[c][i][j] = sum_{a,b} f[a][b] * x[c][R(i + a - c1)][R(j + b - c2)]
void correlate_reflect(std::span<const double> x, PlaneDims dims, const FilterView& f,
                       std::span<double> out);

/// Exact adjoint of correlate_reflect in x (gather form).
void correlate_reflect_adjoint(std::span<const double> y, PlaneDims dims, const FilterView& f,
                               std::span<double> out);

/// d/df of <y, correlate_reflect(x, f)>:
/// g[a][b] = sum_{c,i,j} y[c][i][j] * x[c][R(i + a - c1)][R(j + b - c2)].
/// `g` has f.rows * f.cols entries; f.taps is ignored.
void correlate_reflect_filter_grad(std::span<const double> x, std::span<const double> y,
                                   PlaneDims dims, const FilterView& f, std::span<double> g);

/// Geometry of a square conv layer with reflect padding.
struct ConvGeometry {
  PlaneDims input;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t pad = 0;
  std::size_t out_rows() const noexcept { return (input.rows + 2 * pad - kernel) / stride + 1; }
  std::size_t out_cols() const noexcept { return (input.cols + 2 * pad - kernel) / stride + 1; }
  std::size_t patch() const noexcept { return input.channels * kernel * kernel; }
};

/// Column matrix of shape patch() x (out_rows * out_cols), row-major.
void im2col_reflect(std::span<const double> x, const ConvGeometry& g, std::span<double> cols);

/// Adds the transpose of im2col_reflect applied to `cols` into dx.
void col2im_reflect_add(std::span<const double> cols, const ConvGeometry& g,
                        std::span<double> dx);

}  // namespace dikp::par
