#pragma once

// Central finite-difference oracle for the autograd engine.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dikp/autograd.hpp"
#include "dikp/hourglass.hpp"
#include "dikp/rng.hpp"

namespace gradcheck {

inline std::vector<double> random_values(dikp::Rng& rng, std::size_t n, double lo = -1.0,
                                         double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

/// Relative error of one entry, floored so that gradients that are zero in
/// both computations do not divide by zero.
inline double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

/// Builds loss = f() over the given leaves, runs backward, then compares each
/// selected entry of each leaf's gradient with (f(w + h) - f(w - h)) / 2h.
/// `entries` empty means every entry. Returns the largest relative error.
inline double max_rel_error(const std::function<dikp::ag::Tensor()>& f,
                            std::vector<dikp::ag::Tensor> leaves, double h = 1e-5,
                            const std::vector<std::pair<std::size_t, std::size_t>>& entries = {}) {
  for (auto& t : leaves) t.zero_grad();
  dikp::ag::backward(f());
  std::vector<std::vector<double>> analytic;
  for (auto& t : leaves) analytic.emplace_back(t.grad().begin(), t.grad().end());

  auto numeric = [&](std::size_t li, std::size_t e) {
    dikp::ag::NoGradGuard guard;
    auto data = leaves[li].mutable_data();
    const double saved = data[e];
    data[e] = saved + h;
    const double up = f().item();
    data[e] = saved - h;
    const double down = f().item();
    data[e] = saved;
    return (up - down) / (2.0 * h);
  };

  double worst = 0.0;
  if (entries.empty()) {
    for (std::size_t li = 0; li < leaves.size(); ++li)
      for (std::size_t e = 0; e < leaves[li].size(); ++e)
        worst = std::max(worst, rel_error(analytic[li][e], numeric(li, e)));
  } else {
    for (auto [li, e] : entries) worst = std::max(worst, rel_error(analytic[li][e], numeric(li, e)));
  }
  return worst;
}

/// Scalar probe sum(y * r) with fixed random r, so every output entry
/// contributes a distinct weight.
inline dikp::ag::Tensor probe(const dikp::ag::Tensor& y, const std::vector<double>& r) {
  return dikp::ag::sum(dikp::ag::mul(y, dikp::ag::Tensor::constant(y.shape(), r)));
}

// Keeps samples at least `gap` away from zero so leaky_relu kinks are not
// straddled by the finite-difference stencil.
inline std::vector<double> away_from_zero(dikp::Rng& rng, std::size_t n, double gap = 1e-3) {
  auto v = random_values(rng, n);
  for (double& x : v)
    if (std::abs(x) < gap) x = x < 0 ? -gap : gap;
  return v;
}

struct OpError {
  std::string op;
  double error;
};

/// Worst relative error of every differentiable op on one randomized shape
/// drawn from `trial`.
inline std::vector<OpError> op_errors(int trial) {
  using dikp::ag::Shape;
  using dikp::ag::Tensor;
  namespace ag = dikp::ag;
  dikp::Rng rng(1000 + static_cast<std::uint64_t>(trial));
  auto dim = [&](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo + 1));
  };
  const std::size_t c = dim(1, 3), h = dim(3, 7), w = dim(3, 7);
  const Shape s{1, c, h, w};
  const auto r = random_values(rng, s.size());
  std::vector<OpError> out;

  {
    const std::size_t cout = dim(1, 3), k = 2 * dim(0, 1) + 1, stride = dim(1, 2);
    auto x = Tensor::parameter(s, random_values(rng, s.size()));
    auto wt = Tensor::parameter({cout, c, k, k}, random_values(rng, cout * c * k * k));
    auto b = Tensor::parameter({1, cout, 1, 1}, random_values(rng, cout));
    const Shape os{1, cout, (h + stride - 1) / stride, (w + stride - 1) / stride};
    const auto ro = random_values(rng, os.size());
    auto f = [&] { return probe(ag::conv2d(x, wt, b, stride), ro); };
    out.push_back({"conv2d", max_rel_error(f, {x, wt, b})});
  }
  {
    auto x = Tensor::parameter(s, random_values(rng, s.size()));
    const auto ro = random_values(rng, s.size() * 4);
    out.push_back({"upsample_nearest", max_rel_error([&] { return probe(ag::upsample_nearest(x), ro); }, {x})});
  }
  {
    auto x = Tensor::parameter(s, away_from_zero(rng, s.size()));
    out.push_back({"leaky_relu", max_rel_error([&] { return probe(ag::leaky_relu(x), r); }, {x})});
  }
  {
    auto x = Tensor::parameter(s, random_values(rng, s.size(), -3.0, 3.0));
    out.push_back({"sigmoid", max_rel_error([&] { return probe(ag::sigmoid(x), r); }, {x})});
    out.push_back({"softmax_all", max_rel_error([&] { return probe(ag::softmax_all(x), r); }, {x})});
  }
  {
    auto x = Tensor::parameter(s, random_values(rng, s.size()));
    auto g = Tensor::parameter({1, c, 1, 1}, random_values(rng, c, 0.5, 1.5));
    auto b = Tensor::parameter({1, c, 1, 1}, random_values(rng, c));
    out.push_back({"instance_norm", max_rel_error([&] { return probe(ag::instance_norm(x, g, b), r); }, {x, g, b})});
  }
  {
    auto x = Tensor::parameter(s, random_values(rng, s.size()));
    auto y = Tensor::parameter(s, random_values(rng, s.size()));
    out.push_back({"add", max_rel_error([&] { return probe(ag::add(x, y), r); }, {x, y})});
    out.push_back({"mul", max_rel_error([&] { return probe(ag::mul(x, y), r); }, {x, y})});
    out.push_back({"mse_loss", max_rel_error([&] { return ag::mse_loss(x, y); }, {x, y})});
    out.push_back({"sum", max_rel_error([&] { return ag::sum(x); }, {x})});
  }
  {
    const std::size_t c2 = dim(1, 3);
    auto x = Tensor::parameter(s, random_values(rng, s.size()));
    auto y = Tensor::parameter({1, c2, h, w}, random_values(rng, c2 * h * w));
    const auto ro = random_values(rng, (c + c2) * h * w);
    out.push_back({"concat_channels", max_rel_error([&] { return probe(ag::concat_channels(x, y), ro); }, {x, y})});
  }
  {
    const std::size_t kh = 2 * dim(0, 1) + 1, kw = 2 * dim(0, 1) + 1;
    auto x = Tensor::parameter(s, random_values(rng, s.size()));
    auto k = Tensor::parameter({1, 1, kh, kw}, random_values(rng, kh * kw));
    out.push_back({"convolve_reflect", max_rel_error([&] { return probe(ag::convolve_reflect(x, k), r); }, {x, k})});
  }
  return out;
}

/// Convolution with many channels, checked on `picks` random entries of each
/// operand; exercises the blocked matrix-product paths.
inline double wide_conv_error(int trial, std::size_t picks = 60) {
  using dikp::ag::Tensor;
  dikp::Rng rng(3000 + static_cast<std::uint64_t>(trial));
  const std::size_t cin = 32, cout = 24, h = 12, w = 10, stride = 1 + static_cast<std::size_t>(trial % 2);
  auto x = Tensor::parameter({1, cin, h, w}, random_values(rng, cin * h * w));
  auto wt = Tensor::parameter({cout, cin, 3, 3}, random_values(rng, cout * cin * 9));
  auto b = Tensor::parameter({1, cout, 1, 1}, random_values(rng, cout));
  const auto ro = random_values(rng, cout * ((h + stride - 1) / stride) * ((w + stride - 1) / stride));
  std::vector<std::pair<std::size_t, std::size_t>> entries;
  for (std::size_t i = 0; i < picks; ++i) {
    entries.emplace_back(0, static_cast<std::size_t>(rng.uniform() * static_cast<double>(x.size())));
    entries.emplace_back(1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(wt.size())));
  }
  entries.emplace_back(2, 0);
  auto f = [&] { return probe(dikp::ag::conv2d(x, wt, b, stride), ro); };
  return max_rel_error(f, {x, wt, b}, 1e-5, entries);
}

/// Full hourglass (depth 5, 32 x 32 input, width `width`) under an MSE loss,
/// checked on 10 random weights.
inline double composite_error(int trial, std::size_t width = 4) {
  using dikp::ag::Tensor;
  namespace ag = dikp::ag;
  dikp::Rng rng(20 + static_cast<std::uint64_t>(trial));
  auto cfg = dikp::nn::HourglassConfig::image_net(1, 32, 32, width);
  cfg.input_channels = 3;
  auto net = dikp::nn::build_hourglass(cfg, rng);
  auto z = Tensor::constant(net.input_shape(), random_values(rng, net.input_shape().size(), 0, 0.1));
  auto target = Tensor::constant(net.output_shape(), random_values(rng, net.output_shape().size(), 0, 1));
  auto& params = net.parameters();
  std::vector<std::pair<std::size_t, std::size_t>> picks;
  for (int i = 0; i < 10; ++i) {
    const auto li = static_cast<std::size_t>(rng.uniform() * static_cast<double>(params.size()));
    const auto e = static_cast<std::size_t>(rng.uniform() * static_cast<double>(params[li].size()));
    picks.emplace_back(li, e);
  }
  auto f = [&] { return ag::mse_loss(net.forward(z), target); };
  return max_rel_error(f, params, 1e-5, picks);
}

}  // namespace gradcheck
