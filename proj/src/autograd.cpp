#include "dikp/autograd.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "dikp/error.hpp"
#include "dikp/parallel_kernels.hpp"

namespace dikp::ag {

namespace {

thread_local bool g_grad_enabled = true;

constexpr std::ptrdiff_t kParallelThreshold = 1 << 15;

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

std::vector<double>& grad_of(const Tensor& t) { return t.node()->grad; }

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

}  // namespace

std::string Shape::str() const {
  return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " + std::to_string(h) + ", " +
         std::to_string(w) + ")";
}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  require(values.size() == shape.size(), "tensor data does not match shape " + shape.str());
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->value = std::move(values);
  return Tensor(std::move(node));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  Tensor t = constant(shape, std::move(values));
  t.node_->requires_grad = true;
  t.node_->grad.assign(t.node_->value.size(), 0.0);
  return t;
}

Tensor Tensor::make_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                           std::function<void(Node&)> backward) {
  require(values.size() == shape.size(), "op output does not match shape " + shape.str());
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->value = std::move(values);
  node->leaf = false;
  const bool needs = g_grad_enabled && std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) {
                       return t.requires_grad();
                     });
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& t : inputs) node->inputs.push_back(t.node_);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void Tensor::zero_grad() {
  if (node_->requires_grad) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Tensor::item() const {
  require(node_->value.size() == 1, "item() on a tensor of shape " + node_->shape.str());
  return node_->value[0];
}

Tensor Tensor::detach() const { return constant(node_->shape, node_->value); }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() noexcept { return g_grad_enabled; }

void backward(const Tensor& loss) {
  require(loss.defined() && loss.size() == 1,
          "backward() needs a scalar loss, got shape " + (loss.defined() ? loss.shape().str() : "()"));
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* node : order) {
    if (!node->leaf) node->grad.assign(node->value.size(), 0.0);
  }
  loss.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward) node->backward(*node);
  }
}

// ---------------------------------------------------------------------------

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  require(xs.n == 1, "conv2d input must have batch 1, got " + xs.str());
  require(ws.c == xs.c, "conv2d weight " + ws.str() + " does not match input " + xs.str());
  require(ws.h == ws.w && ws.h % 2 == 1, "conv2d needs an odd square kernel, got " + ws.str());
  require(bias.size() == ws.n, "conv2d bias must have one entry per output channel");
  require(stride == 1 || stride == 2, "conv2d stride must be 1 or 2");

  const std::size_t k = ws.h;
  par::ConvGeometry geom{{xs.c, xs.h, xs.w}, k, stride, k / 2};
  const std::size_t ho = geom.out_rows();
  const std::size_t wo = geom.out_cols();
  const std::size_t spatial = ho * wo;
  const std::size_t patch = geom.patch();
  const std::size_t cout = ws.n;
  const bool direct = k == 1 && stride == 1;

  std::shared_ptr<std::vector<double>> cols;
  const double* colsp = x.data().data();
  if (!direct) {
    cols = std::make_shared<std::vector<double>>(patch * spatial);
    par::im2col_reflect(x.data(), geom, *cols);
    colsp = cols->data();
  }

  std::vector<double> out(cout * spatial);
  const auto bv = bias.data();
  for (std::size_t co = 0; co < cout; ++co) std::fill_n(out.begin() + co * spatial, spatial, bv[co]);
  MutMap(out.data(), cout, spatial).noalias() +=
      ConstMap(weight.data().data(), cout, patch) * ConstMap(colsp, patch, spatial);

  Shape os{1, cout, ho, wo};
  return Tensor::make_result(
      os, std::move(out), {x, weight, bias},
      [x, weight, bias, cols, geom, direct, cout, spatial, patch](Node& self) {
        const double* dy = self.grad.data();
        const double* colsp = direct ? x.data().data() : cols->data();
        if (weight.requires_grad()) {
          MutMap(grad_of(weight).data(), cout, patch).noalias() +=
              ConstMap(dy, cout, spatial) * ConstMap(colsp, patch, spatial).transpose();
        }
        if (bias.requires_grad()) {
          auto& db = grad_of(bias);
          for (std::size_t co = 0; co < cout; ++co) {
            double acc = 0.0;
            for (std::size_t p = 0; p < spatial; ++p) acc += dy[co * spatial + p];
            db[co] += acc;
          }
        }
        if (x.requires_grad()) {
          auto& dx = grad_of(x);
          if (direct) {
            MutMap(dx.data(), patch, spatial).noalias() +=
                ConstMap(weight.data().data(), cout, patch).transpose() * ConstMap(dy, cout, spatial);
          } else {
            std::vector<double> dcols(patch * spatial);
            MutMap(dcols.data(), patch, spatial).noalias() =
                ConstMap(weight.data().data(), cout, patch).transpose() * ConstMap(dy, cout, spatial);
            par::col2im_reflect_add(dcols, geom, dx);
          }
        }
      });
}

Tensor upsample_nearest(const Tensor& x, std::size_t factor) {
  const Shape xs = x.shape();
  require(xs.n == 1, "upsample input must have batch 1");
  require(factor >= 1, "upsample factor must be positive");
  const Shape os{1, xs.c, xs.h * factor, xs.w * factor};
  std::vector<double> out(os.size());
  const auto xv = x.data();
  const auto channels = static_cast<std::ptrdiff_t>(xs.c);
#pragma omp parallel for schedule(static) if (static_cast<std::ptrdiff_t>(os.size()) > kParallelThreshold)
  for (std::ptrdiff_t c = 0; c < channels; ++c)
    for (std::size_t i = 0; i < os.h; ++i)
      for (std::size_t j = 0; j < os.w; ++j)
        out[(static_cast<std::size_t>(c) * os.h + i) * os.w + j] =
            xv[(static_cast<std::size_t>(c) * xs.h + i / factor) * xs.w + j / factor];

  return Tensor::make_result(os, std::move(out), {x}, [x, xs, os, factor](Node& self) {
    auto& dx = grad_of(x);
    const auto channels = static_cast<std::ptrdiff_t>(xs.c);
#pragma omp parallel for schedule(static) if (static_cast<std::ptrdiff_t>(os.size()) > kParallelThreshold)
    for (std::ptrdiff_t c = 0; c < channels; ++c)
      for (std::size_t i = 0; i < os.h; ++i)
        for (std::size_t j = 0; j < os.w; ++j)
          dx[(static_cast<std::size_t>(c) * xs.h + i / factor) * xs.w + j / factor] +=
              self.grad[(static_cast<std::size_t>(c) * os.h + i) * os.w + j];
  });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  const auto xv = x.data();
  const auto n = static_cast<std::ptrdiff_t>(xv.size());
  std::vector<double> out(xv.size());
#pragma omp parallel for schedule(static) if (n > kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = xv[i] > 0.0 ? xv[i] : slope * xv[i];

  return Tensor::make_result(x.shape(), std::move(out), {x}, [x, slope](Node& self) {
    auto& dx = grad_of(x);
    const auto xv = x.data();
    const auto n = static_cast<std::ptrdiff_t>(xv.size());
#pragma omp parallel for schedule(static) if (n > kParallelThreshold)
    for (std::ptrdiff_t i = 0; i < n; ++i) dx[i] += self.grad[i] * (xv[i] > 0.0 ? 1.0 : slope);
  });
}

Tensor sigmoid(const Tensor& x) {
  const auto xv = x.data();
  const auto n = static_cast<std::ptrdiff_t>(xv.size());
  std::vector<double> out(xv.size());
#pragma omp parallel for schedule(static) if (n > kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = 1.0 / (1.0 + std::exp(-xv[i]));

  auto result = Tensor::make_result(x.shape(), std::move(out), {x}, nullptr);
  if (result.requires_grad()) {
    result.node()->backward = [x](Node& self) {
      auto& dx = grad_of(x);
      const auto n = static_cast<std::ptrdiff_t>(self.value.size());
#pragma omp parallel for schedule(static) if (n > kParallelThreshold)
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        const double y = self.value[i];
        dx[i] += self.grad[i] * y * (1.0 - y);
      }
    };
  }
  return result;
}

Tensor softmax_all(const Tensor& x) {
  const auto xv = x.data();
  const double peak = *std::max_element(xv.begin(), xv.end());
  std::vector<double> out(xv.size());
  double total = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    out[i] = std::exp(xv[i] - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;

  auto result = Tensor::make_result(x.shape(), std::move(out), {x}, nullptr);
  if (result.requires_grad()) {
    result.node()->backward = [x](Node& self) {
      double dot = 0.0;
      for (std::size_t i = 0; i < self.value.size(); ++i) dot += self.grad[i] * self.value[i];
      auto& dx = grad_of(x);
      for (std::size_t i = 0; i < self.value.size(); ++i)
        dx[i] += self.value[i] * (self.grad[i] - dot);
    };
  }
  return result;
}

Tensor instance_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const Shape xs = x.shape();
  require(xs.n == 1, "instance_norm input must have batch 1");
  require(gain.size() == xs.c && bias.size() == xs.c,
          "instance_norm gain/bias need one entry per channel");
  const std::size_t plane = xs.plane();
  const auto xv = x.data();
  const auto gv = gain.data();
  const auto bv = bias.data();

  auto xhat = std::make_shared<std::vector<double>>(xs.size());
  auto inv_std = std::make_shared<std::vector<double>>(xs.c);
  std::vector<double> out(xs.size());
  const auto channels = static_cast<std::ptrdiff_t>(xs.c);
#pragma omp parallel for schedule(static) if (static_cast<std::ptrdiff_t>(xs.size()) > kParallelThreshold)
  for (std::ptrdiff_t c = 0; c < channels; ++c) {
    const double* src = xv.data() + static_cast<std::size_t>(c) * plane;
    double mean = 0.0;
    for (std::size_t p = 0; p < plane; ++p) mean += src[p];
    mean /= static_cast<double>(plane);
    double var = 0.0;
    for (std::size_t p = 0; p < plane; ++p) var += (src[p] - mean) * (src[p] - mean);
    var /= static_cast<double>(plane);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[c] = is;
    double* xh = xhat->data() + static_cast<std::size_t>(c) * plane;
    double* dst = out.data() + static_cast<std::size_t>(c) * plane;
    for (std::size_t p = 0; p < plane; ++p) {
      xh[p] = (src[p] - mean) * is;
      dst[p] = gv[c] * xh[p] + bv[c];
    }
  }

  return Tensor::make_result(
      xs, std::move(out), {x, gain, bias}, [x, gain, bias, xhat, inv_std, xs](Node& self) {
        const std::size_t plane = xs.plane();
        const auto gv = gain.data();
        const auto channels = static_cast<std::ptrdiff_t>(xs.c);
        std::vector<double> dgain(xs.c, 0.0), dbias(xs.c, 0.0);
#pragma omp parallel for schedule(static) if (static_cast<std::ptrdiff_t>(xs.size()) > kParallelThreshold)
        for (std::ptrdiff_t c = 0; c < channels; ++c) {
          const double* dy = self.grad.data() + static_cast<std::size_t>(c) * plane;
          const double* xh = xhat->data() + static_cast<std::size_t>(c) * plane;
          double sum_dy = 0.0, sum_dy_xh = 0.0;
          for (std::size_t p = 0; p < plane; ++p) {
            sum_dy += dy[p];
            sum_dy_xh += dy[p] * xh[p];
          }
          dgain[c] = sum_dy_xh;
          dbias[c] = sum_dy;
          if (x.requires_grad()) {
            double* dx = grad_of(x).data() + static_cast<std::size_t>(c) * plane;
            const double inv_n = 1.0 / static_cast<double>(plane);
            const double scale = gv[c] * (*inv_std)[c];
            for (std::size_t p = 0; p < plane; ++p) {
              dx[p] += scale * (dy[p] - inv_n * sum_dy - xh[p] * inv_n * sum_dy_xh);
            }
          }
        }
        if (gain.requires_grad()) {
          auto& dg = grad_of(gain);
          for (std::size_t c = 0; c < xs.c; ++c) dg[c] += dgain[c];
        }
        if (bias.requires_grad()) {
          auto& db = grad_of(bias);
          for (std::size_t c = 0; c < xs.c; ++c) db[c] += dbias[c];
        }
      });
}

Tensor add(const Tensor& x, const Tensor& y) {
  require(x.shape() == y.shape(), "add: shapes " + x.shape().str() + " and " + y.shape().str());
  const auto xv = x.data();
  const auto yv = y.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] + yv[i];
  return Tensor::make_result(x.shape(), std::move(out), {x, y}, [x, y](Node& self) {
    for (const Tensor* t : {&x, &y}) {
      if (!t->requires_grad()) continue;
      auto& g = grad_of(*t);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor mul(const Tensor& x, const Tensor& y) {
  require(x.shape() == y.shape(), "mul: shapes " + x.shape().str() + " and " + y.shape().str());
  const auto xv = x.data();
  const auto yv = y.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * yv[i];
  return Tensor::make_result(x.shape(), std::move(out), {x, y}, [x, y](Node& self) {
    const auto xv = x.data();
    const auto yv = y.data();
    if (x.requires_grad()) {
      auto& g = grad_of(x);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * yv[i];
    }
    if (y.requires_grad()) {
      auto& g = grad_of(y);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * xv[i];
    }
  });
}

Tensor concat_channels(const Tensor& x, const Tensor& y) {
  const Shape xs = x.shape();
  const Shape ys = y.shape();
  require(xs.n == 1 && ys.n == 1 && xs.h == ys.h && xs.w == ys.w,
          "concat_channels: shapes " + xs.str() + " and " + ys.str());
  std::vector<double> out;
  out.reserve(xs.size() + ys.size());
  out.insert(out.end(), x.data().begin(), x.data().end());
  out.insert(out.end(), y.data().begin(), y.data().end());
  const Shape os{1, xs.c + ys.c, xs.h, xs.w};
  return Tensor::make_result(os, std::move(out), {x, y}, [x, y](Node& self) {
    const std::size_t nx = x.size();
    if (x.requires_grad()) {
      auto& g = grad_of(x);
      for (std::size_t i = 0; i < nx; ++i) g[i] += self.grad[i];
    }
    if (y.requires_grad()) {
      auto& g = grad_of(y);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[nx + i];
    }
  });
}

Tensor mse_loss(const Tensor& x, const Tensor& target) {
  require(x.shape() == target.shape(),
          "mse_loss: shapes " + x.shape().str() + " and " + target.shape().str());
  const auto xv = x.data();
  const auto tv = target.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double d = xv[i] - tv[i];
    acc += d * d;
  }
  const double n = static_cast<double>(xv.size());
  return Tensor::make_result({1, 1, 1, 1}, {acc / n}, {x, target}, [x, target, n](Node& self) {
    const double scale = 2.0 * self.grad[0] / n;
    const auto xv = x.data();
    const auto tv = target.data();
    if (x.requires_grad()) {
      auto& g = grad_of(x);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += scale * (xv[i] - tv[i]);
    }
    if (target.requires_grad()) {
      auto& g = grad_of(target);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= scale * (xv[i] - tv[i]);
    }
  });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  return Tensor::make_result({1, 1, 1, 1}, {acc}, {x}, [x](Node& self) {
    auto& g = grad_of(x);
    for (double& v : g) v += self.grad[0];
  });
}

Tensor convolve_reflect(const Tensor& x, const Tensor& k) {
  const Shape xs = x.shape();
  const Shape ks = k.shape();
  require(xs.n == 1, "convolve_reflect input must have batch 1");
  require(ks.n == 1 && ks.c == 1, "convolve_reflect kernel must be (1, 1, h, w), got " + ks.str());
  require(ks.h <= xs.h && ks.w <= xs.w, "convolve_reflect kernel is larger than the image");
  const par::PlaneDims dims{xs.c, xs.h, xs.w};
  const par::FilterView f{k.data(), ks.h, ks.w, ks.h / 2, ks.w / 2};
  std::vector<double> out(xs.size());
  par::correlate_reflect(x.data(), dims, f, out);
  return Tensor::make_result(xs, std::move(out), {x, k}, [x, k, dims, ks](Node& self) {
    const par::FilterView f{k.data(), ks.h, ks.w, ks.h / 2, ks.w / 2};
    if (x.requires_grad()) {
      std::vector<double> dx(x.size());
      par::correlate_reflect_adjoint(self.grad, dims, f, dx);
      auto& g = grad_of(x);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += dx[i];
    }
    if (k.requires_grad()) {
      std::vector<double> dk(k.size());
      par::correlate_reflect_filter_grad(x.data(), self.grad, dims, f, dk);
      auto& g = grad_of(k);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += dk[i];
    }
  });
}

}  // namespace dikp::ag
