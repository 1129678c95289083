#include "dikp/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dikp/error.hpp"

namespace dikp {

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw ValueError(std::string(what) + " contains a non-finite entry");
    }
  }
}

void require_center(std::size_t rows, std::size_t cols, KernelCenter center) {
  if (rows == 0 || cols == 0) throw ShapeError("kernel must be non-empty");
  if (center.row >= rows || center.col >= cols) {
    throw ShapeError("kernel center (" + std::to_string(center.row) + ", " +
                     std::to_string(center.col) + ") lies outside a " + std::to_string(rows) +
                     "x" + std::to_string(cols) + " kernel");
  }
}

}  // namespace

Image::Image(std::size_t channels, std::size_t rows, std::size_t cols, double fill)
    : channels_(channels), rows_(rows), cols_(cols), data_(channels * rows * cols, fill) {
  if (!std::isfinite(fill)) throw ValueError("image fill value is not finite");
}

Image::Image(std::size_t channels, std::size_t rows, std::size_t cols, std::vector<double> data)
    : channels_(channels), rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != channels * rows * cols) {
    throw ShapeError("image data has " + std::to_string(data_.size()) + " entries, expected " +
                     std::to_string(channels * rows * cols));
  }
  require_finite(data_, "image");
}

void Image::clamp() {
  for (double& v : data_) v = std::clamp(v, 0.0, 1.0);
  clamped_ = true;
}

void Image::check_finite() const { require_finite(data_, "image"); }

Image center_crop(const Image& img, std::size_t rows, std::size_t cols) {
  if (rows > img.rows() || cols > img.cols()) {
    throw ShapeError("cannot crop " + std::to_string(img.rows()) + "x" +
                     std::to_string(img.cols()) + " image to " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
  const std::size_t r0 = (img.rows() - rows) / 2;
  const std::size_t c0 = (img.cols() - cols) / 2;
  Image out(img.channels(), rows, cols);
  for (std::size_t c = 0; c < img.channels(); ++c)
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) out(c, i, j) = img(c, r0 + i, c0 + j);
  return out;
}

Kernel::Kernel(std::size_t rows, std::size_t cols, std::vector<double> data, KernelCenter center)
    : rows_(rows), cols_(cols), data_(std::move(data)), center_(center) {
  require_center(rows, cols, center);
  if (data_.size() != rows * cols) throw ShapeError("kernel data size does not match its shape");
  require_finite(data_, "kernel");
  if (std::any_of(data_.begin(), data_.end(), [](double v) { return v < 0.0; })) {
    throw ValueError("kernel has a negative entry");
  }
  const double sum = std::accumulate(data_.begin(), data_.end(), 0.0);
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw ValueError("kernel entries sum to " + std::to_string(sum) + ", expected 1");
  }
}

Kernel Kernel::normalize(std::size_t rows, std::size_t cols, std::vector<double> weights,
                         KernelCenter center) {
  require_center(rows, cols, center);
  if (weights.size() != rows * cols) throw ShapeError("kernel data size does not match its shape");
  require_finite(weights, "kernel");
  if (std::any_of(weights.begin(), weights.end(), [](double v) { return v < 0.0; })) {
    throw ValueError("kernel has a negative entry");
  }
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(sum > 0.0)) throw ValueError("kernel weights sum to zero");
  for (double& w : weights) w /= sum;
  Kernel k;
  k.rows_ = rows;
  k.cols_ = cols;
  k.data_ = std::move(weights);
  k.center_ = center;
  return k;
}

Kernel Kernel::delta(std::size_t rows, std::size_t cols, KernelCenter center) {
  require_center(rows, cols, center);
  std::vector<double> data(rows * cols, 0.0);
  data[center.row * cols + center.col] = 1.0;
  return Kernel(rows, cols, std::move(data), center);
}

Kernel Kernel::uniform(std::size_t rows, std::size_t cols, KernelCenter center) {
  return normalize(rows, cols, std::vector<double>(rows * cols, 1.0), center);
}

}  // namespace dikp
