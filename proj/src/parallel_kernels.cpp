#include "dikp/parallel_kernels.hpp"

#include <vector>

namespace dikp::par {

namespace {

// table[i * taps + a] = R(i + a - center)
std::vector<std::size_t> reflect_table(std::size_t n, std::size_t taps, std::size_t center) {
  std::vector<std::size_t> table(n * taps);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < taps; ++a)
      table[i * taps + a] = reflect_index(static_cast<std::ptrdiff_t>(i + a) -
                                              static_cast<std::ptrdiff_t>(center),
                                          n);
  return table;
}

struct Tap {
  std::size_t src;     // output index of the forward map
  std::size_t offset;  // filter index
};

// For each p, the (i, a) pairs with R(i + a - center) == p, in (i, a) order.
std::vector<std::vector<Tap>> inverse_taps(std::size_t n, std::size_t taps, std::size_t center) {
  const auto table = reflect_table(n, taps, center);
  std::vector<std::vector<Tap>> inv(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < taps; ++a) inv[table[i * taps + a]].push_back({i, a});
  return inv;
}

}  // namespace

void correlate_reflect(std::span<const double> x, PlaneDims dims, const FilterView& f,
                       std::span<double> out) {
  const auto rt = reflect_table(dims.rows, f.rows, f.center_row);
  const auto ct = reflect_table(dims.cols, f.cols, f.center_col);
  const auto channels = static_cast<std::ptrdiff_t>(dims.channels);
  const auto rows = static_cast<std::ptrdiff_t>(dims.rows);

#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t c = 0; c < channels; ++c) {
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
      const double* plane = x.data() + static_cast<std::size_t>(c) * dims.plane();
      double* dst = out.data() + (static_cast<std::size_t>(c) * dims.rows + i) * dims.cols;
      for (std::size_t j = 0; j < dims.cols; ++j) {
        double acc = 0.0;
        for (std::size_t a = 0; a < f.rows; ++a) {
          const double* src = plane + rt[i * f.rows + a] * dims.cols;
          const double* frow = f.taps.data() + a * f.cols;
          const std::size_t* cj = ct.data() + j * f.cols;
          for (std::size_t b = 0; b < f.cols; ++b) acc += frow[b] * src[cj[b]];
        }
        dst[j] = acc;
      }
    }
  }
}

void correlate_reflect_adjoint(std::span<const double> y, PlaneDims dims, const FilterView& f,
                               std::span<double> out) {
  const auto rinv = inverse_taps(dims.rows, f.rows, f.center_row);
  const auto cinv = inverse_taps(dims.cols, f.cols, f.center_col);
  const auto channels = static_cast<std::ptrdiff_t>(dims.channels);
  const auto rows = static_cast<std::ptrdiff_t>(dims.rows);

#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t c = 0; c < channels; ++c) {
    for (std::ptrdiff_t p = 0; p < rows; ++p) {
      const double* plane = y.data() + static_cast<std::size_t>(c) * dims.plane();
      double* dst = out.data() + (static_cast<std::size_t>(c) * dims.rows + p) * dims.cols;
      for (std::size_t q = 0; q < dims.cols; ++q) {
        double acc = 0.0;
        for (const Tap& rtap : rinv[p]) {
          const double* src = plane + rtap.src * dims.cols;
          const double* frow = f.taps.data() + rtap.offset * f.cols;
          for (const Tap& ctap : cinv[q]) acc += frow[ctap.offset] * src[ctap.src];
        }
        dst[q] = acc;
      }
    }
  }
}

void correlate_reflect_filter_grad(std::span<const double> x, std::span<const double> y,
                                   PlaneDims dims, const FilterView& f, std::span<double> g) {
  const auto rt = reflect_table(dims.rows, f.rows, f.center_row);
  const auto ct = reflect_table(dims.cols, f.cols, f.center_col);
  const auto ntaps = static_cast<std::ptrdiff_t>(f.rows * f.cols);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < ntaps; ++t) {
    const std::size_t a = static_cast<std::size_t>(t) / f.cols;
    const std::size_t b = static_cast<std::size_t>(t) % f.cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < dims.channels; ++c) {
      const double* xp = x.data() + c * dims.plane();
      const double* yp = y.data() + c * dims.plane();
      for (std::size_t i = 0; i < dims.rows; ++i) {
        const double* src = xp + rt[i * f.rows + a] * dims.cols;
        const double* yrow = yp + i * dims.cols;
        for (std::size_t j = 0; j < dims.cols; ++j) acc += yrow[j] * src[ct[j * f.cols + b]];
      }
    }
    g[static_cast<std::size_t>(t)] = acc;
  }
}

void im2col_reflect(std::span<const double> x, const ConvGeometry& g, std::span<double> cols) {
  const std::size_t ho = g.out_rows();
  const std::size_t wo = g.out_cols();
  const std::size_t k = g.kernel;
  const auto channels = static_cast<std::ptrdiff_t>(g.input.channels);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < channels; ++c) {
    const double* plane = x.data() + static_cast<std::size_t>(c) * g.input.plane();
    std::vector<std::size_t> colmap(wo);
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        for (std::size_t ox = 0; ox < wo; ++ox)
          colmap[ox] = reflect_index(
              static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad),
              g.input.cols);
        double* dst = cols.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * ho * wo;
        for (std::size_t oy = 0; oy < ho; ++oy) {
          const std::size_t iy = reflect_index(
              static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad),
              g.input.rows);
          const double* src = plane + iy * g.input.cols;
          for (std::size_t ox = 0; ox < wo; ++ox) dst[oy * wo + ox] = src[colmap[ox]];
        }
      }
    }
  }
}

void col2im_reflect_add(std::span<const double> cols, const ConvGeometry& g,
                        std::span<double> dx) {
  const std::size_t ho = g.out_rows();
  const std::size_t wo = g.out_cols();
  const std::size_t k = g.kernel;
  const auto channels = static_cast<std::ptrdiff_t>(g.input.channels);

  // Each channel is written by exactly one thread, in a fixed order.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < channels; ++c) {
    double* plane = dx.data() + static_cast<std::size_t>(c) * g.input.plane();
    std::vector<std::size_t> colmap(wo);
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        for (std::size_t ox = 0; ox < wo; ++ox)
          colmap[ox] = reflect_index(
              static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad),
              g.input.cols);
        const double* src =
            cols.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * ho * wo;
        for (std::size_t oy = 0; oy < ho; ++oy) {
          const std::size_t iy = reflect_index(
              static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad),
              g.input.rows);
          double* dst = plane + iy * g.input.cols;
          for (std::size_t ox = 0; ox < wo; ++ox) dst[colmap[ox]] += src[oy * wo + ox];
        }
      }
    }
  }
}

}  // namespace dikp::par
