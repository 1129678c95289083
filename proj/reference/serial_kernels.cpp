#include "serial_kernels.hpp"

#include <algorithm>

namespace dikp::serial {

using par::reflect_index;

void correlate_reflect(std::span<const double> x, par::PlaneDims dims, const par::FilterView& f,
                       std::span<double> out) {
  for (std::size_t c = 0; c < dims.channels; ++c) {
    const double* plane = x.data() + c * dims.plane();
    for (std::size_t i = 0; i < dims.rows; ++i) {
      for (std::size_t j = 0; j < dims.cols; ++j) {
        double acc = 0.0;
        for (std::size_t a = 0; a < f.rows; ++a) {
          const auto r = reflect_index(static_cast<std::ptrdiff_t>(i + a) - static_cast<std::ptrdiff_t>(f.center_row), dims.rows);
          for (std::size_t b = 0; b < f.cols; ++b) {
            const auto s = reflect_index(static_cast<std::ptrdiff_t>(j + b) - static_cast<std::ptrdiff_t>(f.center_col), dims.cols);
            acc += f.taps[a * f.cols + b] * plane[r * dims.cols + s];
          }
        }
        out[(c * dims.rows + i) * dims.cols + j] = acc;
      }
    }
  }
}

void correlate_reflect_adjoint(std::span<const double> y, par::PlaneDims dims,
                               const par::FilterView& f, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t c = 0; c < dims.channels; ++c) {
    double* plane = out.data() + c * dims.plane();
    for (std::size_t i = 0; i < dims.rows; ++i) {
      for (std::size_t j = 0; j < dims.cols; ++j) {
        const double v = y[(c * dims.rows + i) * dims.cols + j];
        for (std::size_t a = 0; a < f.rows; ++a) {
          const auto r = reflect_index(static_cast<std::ptrdiff_t>(i + a) - static_cast<std::ptrdiff_t>(f.center_row), dims.rows);
          for (std::size_t b = 0; b < f.cols; ++b) {
            const auto s = reflect_index(static_cast<std::ptrdiff_t>(j + b) - static_cast<std::ptrdiff_t>(f.center_col), dims.cols);
            plane[r * dims.cols + s] += f.taps[a * f.cols + b] * v;
          }
        }
      }
    }
  }
}

void conv2d_direct(std::span<const double> x, const par::ConvGeometry& g,
                   std::span<const double> weight, std::span<const double> bias, std::size_t cout,
                   std::span<double> out) {
  const std::size_t ho = g.out_rows(), wo = g.out_cols(), k = g.kernel;
  const auto& in = g.input;
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        double acc = bias[o];
        for (std::size_t c = 0; c < in.channels; ++c) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            const auto iy = reflect_index(static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad), in.rows);
            for (std::size_t kx = 0; kx < k; ++kx) {
              const auto ix = reflect_index(static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad), in.cols);
              acc += weight[((o * in.channels + c) * k + ky) * k + kx] * x[(c * in.rows + iy) * in.cols + ix];
            }
          }
        }
        out[(o * ho + oy) * wo + ox] = acc;
      }
    }
  }
}

}  // namespace dikp::serial
