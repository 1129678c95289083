#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dikp/autograd.hpp"

namespace dikp {

/// Bias-corrected Adam.
struct AdamState {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t t = 0;

  AdamState() = default;
  /// Zero moments sized like `sizes`.
  AdamState(double lr, std::span<const std::size_t> sizes);
  /// Zero moments sized like the given parameters.
  AdamState(double lr, std::span<const ag::Tensor> params);
};

/// One update of params[k] with grads[k]. Throws ShapeError if the lists do
/// not match the moment arrays.
void adam_step(AdamState& state, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads);
/// Same, reading each parameter's accumulated gradient.
void adam_step(AdamState& state, std::span<ag::Tensor> params);

}  // namespace dikp
