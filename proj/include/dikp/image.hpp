#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dikp {

/// A d x m x n stack of 64-bit intensities, channel-major then row-major.
///
/// Canonical images live in [0, 1]; degraded observations may leave that
/// range because of additive noise, so the range is not enforced. Every
/// entry must be finite at construction.
class Image {
 public:
  Image() = default;
  Image(std::size_t channels, std::size_t rows, std::size_t cols, double fill = 0.0);
  Image(std::size_t channels, std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t plane_size() const noexcept { return rows_ * cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t c, std::size_t i, std::size_t j) {
    return data_[(c * rows_ + i) * cols_ + j];
  }
  double operator()(std::size_t c, std::size_t i, std::size_t j) const {
    return data_[(c * rows_ + i) * cols_ + j];
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::span<double> channel(std::size_t c) noexcept {
    return std::span<double>(data_).subspan(c * plane_size(), plane_size());
  }
  std::span<const double> channel(std::size_t c) const noexcept {
    return std::span<const double>(data_).subspan(c * plane_size(), plane_size());
  }

  bool same_shape(const Image& other) const noexcept {
    return channels_ == other.channels_ && rows_ == other.rows_ && cols_ == other.cols_;
  }

  /// Whether clamp() has been applied to this image.
  bool clamped() const noexcept { return clamped_; }
  void clamp();

  /// Throws ValueError when any entry is NaN or infinite.
  void check_finite() const;

 private:
  std::size_t channels_ = 0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
  bool clamped_ = false;
};

/// Center crop to rows x cols; throws ShapeError if the image is smaller.
Image center_crop(const Image& img, std::size_t rows, std::size_t cols);

struct KernelCenter {
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const KernelCenter&) const = default;
};

/// Nonnegative h x w point-spread function summing to one.
class Kernel {
 public:
  static constexpr double kSumTolerance = 1e-12;

  Kernel() = default;
  /// Strict constructor: rejects negative or non-finite entries and sums off
  /// by more than kSumTolerance.
  Kernel(std::size_t rows, std::size_t cols, std::vector<double> data, KernelCenter center);

  /// Rescales nonnegative weights to sum to one. Throws ValueError on a
  /// negative, non-finite or all-zero input.
  static Kernel normalize(std::size_t rows, std::size_t cols, std::vector<double> weights,
                          KernelCenter center);
  static Kernel delta(std::size_t rows, std::size_t cols, KernelCenter center);
  static Kernel uniform(std::size_t rows, std::size_t cols, KernelCenter center);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  KernelCenter center() const noexcept { return center_; }

  double operator()(std::size_t a, std::size_t b) const { return data_[a * cols_ + b]; }
  std::span<const double> values() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
  KernelCenter center_;
};

}  // namespace dikp
