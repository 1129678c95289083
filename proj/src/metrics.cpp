#include "dikp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "dikp/error.hpp"

namespace dikp {

namespace {

void require_same_shape(const Image& a, const Image& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("image shapes differ: " + std::to_string(a.channels()) + "x" +
                     std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.channels()) + "x" + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

}  // namespace

double mse(const Image& a, const Image& b) {
  require_same_shape(a, b);
  if (a.empty()) throw ShapeError("mse of empty images");
  const auto av = a.values();
  const auto bv = b.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    acc += d * d;
  }
  return acc / static_cast<double>(av.size());
}

double psnr(const Image& x, const Image& ref, double peak) {
  const double err = mse(x, ref);
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / err);
}

std::vector<double> grad_h(std::span<const double> x, std::size_t rows, std::size_t cols) {
  std::vector<double> g(rows * cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j + 1 < cols; ++j) g[i * cols + j] = x[i * cols + j + 1] - x[i * cols + j];
  return g;
}

std::vector<double> grad_v(std::span<const double> x, std::size_t rows, std::size_t cols) {
  std::vector<double> g(rows * cols, 0.0);
  for (std::size_t i = 0; i + 1 < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) g[i * cols + j] = x[(i + 1) * cols + j] - x[i * cols + j];
  return g;
}

double tv_norm(const Image& x) {
  double total = 0.0;
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const auto plane = x.channel(c);
    const auto gh = grad_h(plane, x.rows(), x.cols());
    const auto gv = grad_v(plane, x.rows(), x.cols());
    for (std::size_t p = 0; p < gh.size(); ++p) total += std::sqrt(gh[p] * gh[p] + gv[p] * gv[p]);
  }
  return total;
}

double l1_norm(std::span<const double> values) {
  double total = 0.0;
  for (double v : values) total += std::abs(v);
  return total;
}

GradientHistogram gradient_histogram(std::span<const Image> images) {
  if (images.empty()) throw ValueError("gradient histogram needs at least one image");
  GradientHistogram h;
  constexpr auto bins = GradientHistogram::kBins;
  for (std::size_t k = 0; k <= bins; ++k) {
    h.edges[k] = -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(bins);
  }
  std::array<std::size_t, bins> counts{};
  auto add = [&](double v) {
    if (!(v >= -1.0 && v <= 1.0)) {
      ++h.dropped;
      return;
    }
    // (v + 1) * 32 is exact for values on an edge, so edges land in the right bin.
    auto b = static_cast<std::size_t>(std::floor((v + 1.0) * (bins / 2.0)));
    if (b >= bins) b = bins - 1;
    ++counts[b];
    ++h.counted;
  };
  for (const Image& img : images) {
    for (std::size_t c = 0; c < img.channels(); ++c) {
      const auto plane = img.channel(c);
      for (double v : grad_h(plane, img.rows(), img.cols())) add(v);
      for (double v : grad_v(plane, img.rows(), img.cols())) add(v);
    }
  }
  if (h.counted > 0) {
    for (std::size_t b = 0; b < bins; ++b) {
      h.probs[b] = static_cast<double>(counts[b]) / static_cast<double>(h.counted);
    }
  }
  return h;
}

double kl_divergence(std::span<const double> p, std::span<const double> q, double eps) {
  if (p.size() != q.size()) throw ShapeError("KL divergence over different binnings");
  double kl = 0.0;
  for (std::size_t b = 0; b < p.size(); ++b) {
    if (p[b] > 0.0) kl += p[b] * std::log(p[b] / std::max(q[b], eps));
  }
  return kl;
}

double kl_divergence(const GradientHistogram& p, const GradientHistogram& q, double eps) {
  if (p.edges != q.edges) throw ShapeError("KL divergence over different binnings");
  return kl_divergence(std::span<const double>(p.probs), std::span<const double>(q.probs), eps);
}

std::string histogram_to_csv(const GradientHistogram& h) {
  std::string out = "bin_center,probability\n";
  char buf[96];
  for (std::size_t b = 0; b < GradientHistogram::kBins; ++b) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", h.bin_center(b), h.probs[b]);
    out += buf;
  }
  return out;
}

void save_histogram_csv(const GradientHistogram& h, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write histogram '" + path.string() + "'");
  out << histogram_to_csv(h);
}

}  // namespace dikp
