#include "dikp/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "dikp/error.hpp"
#include "dikp/parallel_kernels.hpp"
#include "dikp/rng.hpp"

namespace dikp {

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::Gaussian: return "gaussian";
    case KernelKind::Defocus: return "defocus";
    case KernelKind::Motion: return "motion";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "gaussian") return KernelKind::Gaussian;
  if (name == "defocus") return KernelKind::Defocus;
  if (name == "motion") return KernelKind::Motion;
  throw ConfigError("unknown kernel kind '" + std::string(name) +
                    "' (expected gaussian, defocus or motion)");
}

KernelSpec KernelSpec::defaults(KernelKind kind, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw ConfigError("kernel support must be at least 1x1");
  KernelSpec spec;
  spec.kind = kind;
  spec.rows = rows;
  spec.cols = cols;
  spec.center = {rows / 2, cols / 2};
  spec.sigma_row = 2.0;
  spec.sigma_col = 2.0;
  spec.radius = std::floor(std::min(rows / 2.0, cols / 2.0));
  spec.amplitude = std::numbers::sqrt2 * spec.radius;
  spec.angle = 3.0 * std::numbers::pi / 4.0;
  return spec;
}

namespace {

void validate_support(const KernelSpec& spec) {
  if (spec.rows == 0 || spec.cols == 0) throw ConfigError("kernel support must be at least 1x1");
  if (spec.center.row >= spec.rows || spec.center.col >= spec.cols) {
    throw ConfigError("kernel center lies outside the support");
  }
}

}  // namespace

Kernel gaussian_kernel(const KernelSpec& spec) {
  validate_support(spec);
  if (!(spec.sigma_row > 0.0) || !(spec.sigma_col > 0.0)) {
    throw ConfigError("Gaussian kernel widths must be positive");
  }
  std::vector<double> w(spec.rows * spec.cols);
  for (std::size_t i = 0; i < spec.rows; ++i) {
    const double di = (static_cast<double>(i) - static_cast<double>(spec.center.row)) / spec.sigma_row;
    for (std::size_t j = 0; j < spec.cols; ++j) {
      const double dj =
          (static_cast<double>(j) - static_cast<double>(spec.center.col)) / spec.sigma_col;
      w[i * spec.cols + j] = std::exp(-0.5 * di * di - 0.5 * dj * dj);
    }
  }
  return Kernel::normalize(spec.rows, spec.cols, std::move(w), spec.center);
}

Kernel defocus_kernel(const KernelSpec& spec) {
  validate_support(spec);
  if (!(spec.radius > 0.0)) throw ConfigError("defocus radius must be positive");
  const double r2 = spec.radius * spec.radius;
  const double level = 1.0 / (std::numbers::pi * r2);
  std::vector<double> w(spec.rows * spec.cols, 0.0);
  for (std::size_t i = 0; i < spec.rows; ++i) {
    const double di = static_cast<double>(i) - static_cast<double>(spec.center.row);
    for (std::size_t j = 0; j < spec.cols; ++j) {
      const double dj = static_cast<double>(j) - static_cast<double>(spec.center.col);
      if (di * di + dj * dj <= r2) w[i * spec.cols + j] = level;
    }
  }
  return Kernel::normalize(spec.rows, spec.cols, std::move(w), spec.center);
}

Kernel motion_kernel(const KernelSpec& spec) {
  validate_support(spec);
  if (!(spec.amplitude >= 0.0) || !std::isfinite(spec.angle)) {
    throw ConfigError("motion amplitude must be nonnegative and the angle finite");
  }
  const double dr = std::cos(spec.angle);
  const double dc = std::sin(spec.angle);
  const double major = std::max(std::abs(dr), std::abs(dc));
  // Tolerance absorbs rounding in amplitude * major (e.g. 4*sqrt(2)*sqrt(2)/2).
  const auto steps = static_cast<long>(std::floor(spec.amplitude * major + 1e-9));
  const double step_r = dr / major;
  const double step_c = dc / major;

  std::vector<double> w(spec.rows * spec.cols, 0.0);
  const double share = 1.0 / static_cast<double>(2 * steps + 1);
  for (long t = -steps; t <= steps; ++t) {
    const long i = static_cast<long>(spec.center.row) + std::lround(static_cast<double>(t) * step_r);
    const long j = static_cast<long>(spec.center.col) + std::lround(static_cast<double>(t) * step_c);
    if (i < 0 || j < 0 || i >= static_cast<long>(spec.rows) || j >= static_cast<long>(spec.cols)) {
      continue;
    }
    w[static_cast<std::size_t>(i) * spec.cols + static_cast<std::size_t>(j)] += share;
  }
  return Kernel::normalize(spec.rows, spec.cols, std::move(w), spec.center);
}

Kernel make_kernel(const KernelSpec& spec) {
  switch (spec.kind) {
    case KernelKind::Gaussian: return gaussian_kernel(spec);
    case KernelKind::Defocus: return defocus_kernel(spec);
    case KernelKind::Motion: return motion_kernel(spec);
  }
  throw ConfigError("unknown kernel kind");
}

Image convolve(const Image& img, const Kernel& k) {
  if (k.rows() > img.rows() || k.cols() > img.cols()) {
    throw ShapeError("kernel " + std::to_string(k.rows()) + "x" + std::to_string(k.cols()) +
                     " is larger than image " + std::to_string(img.rows()) + "x" +
                     std::to_string(img.cols()));
  }
  Image out(img.channels(), img.rows(), img.cols());
  const par::FilterView f{k.values(), k.rows(), k.cols(), k.center().row, k.center().col};
  par::correlate_reflect(img.values(), {img.channels(), img.rows(), img.cols()}, f, out.values());
  return out;
}

Image degrade(const Image& img, const Kernel& k, double sigma, std::uint64_t seed) {
  Image out = convolve(img, k);
  Rng rng(seed);
  const auto noise = gaussian_noise(rng, out.size(), sigma);
  auto values = out.values();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += noise[i];
  return out;
}

Image degrade(const Image& img, const DegradationSpec& spec) {
  return degrade(img, make_kernel(spec.kernel), spec.sigma, spec.seed);
}

std::string kernel_to_csv(const Kernel& k) {
  std::string out;
  char buf[64];
  for (std::size_t a = 0; a < k.rows(); ++a) {
    for (std::size_t b = 0; b < k.cols(); ++b) {
      std::snprintf(buf, sizeof(buf), "%.17g", k(a, b));
      if (b > 0) out.push_back(',');
      out += buf;
    }
    out.push_back('\n');
  }
  return out;
}

void save_kernel_csv(const Kernel& k, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write kernel '" + path.string() + "'");
  out << kernel_to_csv(k);
  if (!out) throw IoError("failed while writing kernel '" + path.string() + "'");
}

Kernel load_kernel_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open kernel '" + path.string() + "'");
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw IoError(path.string() + ": malformed kernel entry '" + cell + "'");
      }
      ++count;
    }
    if (rows == 0) cols = count;
    if (count != cols) throw IoError(path.string() + ": ragged kernel rows");
    ++rows;
  }
  if (rows == 0) throw IoError(path.string() + ": empty kernel file");
  try {
    // Keep already-normalized weights bit-exact so saved kernels round-trip.
    const double sum = std::accumulate(values.begin(), values.end(), 0.0);
    if (std::abs(sum - 1.0) <= Kernel::kSumTolerance)
      return Kernel(rows, cols, std::move(values), {rows / 2, cols / 2});
    return Kernel::normalize(rows, cols, std::move(values), {rows / 2, cols / 2});
  } catch (const ValueError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace dikp
