#include "dikp/adam.hpp"

#include <cmath>

#include "dikp/error.hpp"

namespace dikp {

AdamState::AdamState(double lr_, std::span<const std::size_t> sizes) : lr(lr_) {
  for (std::size_t n : sizes) {
    m.emplace_back(n, 0.0);
    v.emplace_back(n, 0.0);
  }
}

AdamState::AdamState(double lr_, std::span<const ag::Tensor> params) : lr(lr_) {
  for (const auto& p : params) {
    m.emplace_back(p.size(), 0.0);
    v.emplace_back(p.size(), 0.0);
  }
}

void adam_step(AdamState& s, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads) {
  if (params.size() != s.m.size() || grads.size() != s.m.size()) {
    throw ShapeError("adam: parameter list does not match optimizer state");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != s.m[k].size() || grads[k].size() != s.m[k].size()) {
      throw ShapeError("adam: parameter " + std::to_string(k) + " does not match optimizer state");
    }
  }
  ++s.t;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = s.m[k];
    auto& v = s.v[k];
    const auto g = grads[k];
    const auto w = params[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
      v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
      w[i] -= s.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + s.eps);
    }
  }
}

void adam_step(AdamState& state, std::span<ag::Tensor> params) {
  std::vector<std::span<double>> w;
  std::vector<std::span<const double>> g;
  w.reserve(params.size());
  g.reserve(params.size());
  for (auto& p : params) {
    w.push_back(p.mutable_data());
    g.push_back(p.grad());
  }
  adam_step(state, w, g);
}

}  // namespace dikp
