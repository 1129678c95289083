#pragma once

// Independent slow implementations used as test oracles. They share no code
// with the library beyond the Image/Kernel containers.

#include <cmath>
#include <cstddef>
#include <vector>

#include "dikp/image.hpp"

namespace oracle {

/// Mirror an out-of-range index back inside [0, n), edge sample included
/// (-1 -> 0, n -> n - 1), by repeated folding.
inline long mirror(long i, long n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

/// Quadruple loop over an explicitly extended image.
inline dikp::Image convolve(const dikp::Image& x, const dikp::Kernel& k) {
  const long m = static_cast<long>(x.rows()), n = static_cast<long>(x.cols());
  const long h = static_cast<long>(k.rows()), w = static_cast<long>(k.cols());
  const long c1 = static_cast<long>(k.center().row), c2 = static_cast<long>(k.center().col);
  dikp::Image out(x.channels(), x.rows(), x.cols());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    // Extended plane covering rows [-c1, m + h - c1) and cols [-c2, n + w - c2).
    const long em = m + h, en = n + w;
    std::vector<double> ext(static_cast<std::size_t>(em * en));
    for (long i = 0; i < em; ++i)
      for (long j = 0; j < en; ++j)
        ext[static_cast<std::size_t>(i * en + j)] = x(c, mirror(i - c1, m), mirror(j - c2, n));
    for (long i = 0; i < m; ++i) {
      for (long j = 0; j < n; ++j) {
        double acc = 0.0;
        for (long a = 0; a < h; ++a)
          for (long b = 0; b < w; ++b)
            acc += k(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) *
                   ext[static_cast<std::size_t>((i + a) * en + (j + b))];
        out(c, static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = acc;
      }
    }
  }
  return out;
}

/// Transpose of convolve(): every tap scatters back to the pixel it read.
inline dikp::Image adjoint(const dikp::Image& y, const dikp::Kernel& k) {
  const long m = static_cast<long>(y.rows()), n = static_cast<long>(y.cols());
  const long c1 = static_cast<long>(k.center().row), c2 = static_cast<long>(k.center().col);
  dikp::Image out(y.channels(), y.rows(), y.cols());
  for (std::size_t c = 0; c < y.channels(); ++c)
    for (long i = 0; i < m; ++i)
      for (long j = 0; j < n; ++j)
        for (long a = 0; a < static_cast<long>(k.rows()); ++a)
          for (long b = 0; b < static_cast<long>(k.cols()); ++b)
            out(c, static_cast<std::size_t>(mirror(i + a - c1, m)), static_cast<std::size_t>(mirror(j + b - c2, n))) +=
                k(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) *
                y(c, static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  return out;
}

inline double dot(const dikp::Image& a, const dikp::Image& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
  return s;
}

/// Isotropic TV with Neumann forward differences, written out directly.
inline double tv(const dikp::Image& x) {
  double s = 0.0;
  for (std::size_t c = 0; c < x.channels(); ++c)
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) {
        const double gh = j + 1 < x.cols() ? x(c, i, j + 1) - x(c, i, j) : 0.0;
        const double gv = i + 1 < x.rows() ? x(c, i + 1, j) - x(c, i, j) : 0.0;
        s += std::sqrt(gh * gh + gv * gv);
      }
  return s;
}

}  // namespace oracle
