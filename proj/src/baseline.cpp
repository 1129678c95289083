#include "dikp/baseline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>

#include "dikp/degrade.hpp"
#include "dikp/error.hpp"
#include "dikp/metrics.hpp"
#include "dikp/parallel_kernels.hpp"
#include "dikp/rng.hpp"

namespace dikp::baseline {

namespace {

using Clock = std::chrono::steady_clock;

// Power iteration approaches ||A||^2 from below.
constexpr double kPowerSafety = 1.01;
constexpr int kMaxStepHalvings = 30;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

par::FilterView view_of(const Kernel& k) {
  return {k.values(), k.rows(), k.cols(), k.center().row, k.center().col};
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Largest eigenvalue of op^T op for a linear map on R^n.
double power_estimate(std::size_t n, std::size_t iters,
                      const std::function<void(std::span<const double>, std::span<double>)>& gram) {
  Rng rng(0x5eed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform() - 0.5;
  double nv = norm2(v);
  for (double& x : v) x /= nv;
  std::vector<double> w(n);
  double estimate = 0.0;
  for (std::size_t it = 0; it < std::max<std::size_t>(iters, 1); ++it) {
    gram(v, w);
    estimate = norm2(w);
    if (estimate == 0.0) return 0.0;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / estimate;
  }
  return estimate;
}

// (D^T (p, q)) for one plane, D = Neumann forward differences.
void apply_dt(const double* p, const double* q, std::size_t rows, std::size_t cols, double* out) {
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      double v = 0.0;
      if (j >= 1) v += p[i * cols + j - 1];
      if (j + 1 < cols) v -= p[i * cols + j];
      if (i >= 1) v += q[(i - 1) * cols + j];
      if (i + 1 < rows) v -= q[i * cols + j];
      out[i * cols + j] = v;
    }
  }
}

Image data_gradient(const Image& y, const Kernel& k, const Image& b) {
  Image residual = convolve(y, k);
  auto rv = residual.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < rv.size(); ++i) rv[i] -= bv[i];
  Image g = adjoint_convolve(residual, k);
  const double scale = 2.0 / static_cast<double>(b.size());
  for (double& v : g.values()) v *= scale;
  return g;
}

}  // namespace

BaselineConfig BaselineConfig::kernel_known() {
  BaselineConfig cfg;
  cfg.alpha = 2e-2;
  return cfg;
}

BaselineConfig BaselineConfig::blind() {
  BaselineConfig cfg;
  cfg.alpha = 2e-3;
  cfg.beta = 5.0;
  return cfg;
}

void BaselineConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be positive");
  if (inner_iters_x == 0) throw ConfigError("inner_iters_x must be at least 1");
}

std::string trace_to_csv(const SolverTrace& trace) {
  std::string out = "iter,objective,seconds\n";
  char buf[128];
  for (std::size_t i = 0; i < trace.objective.size(); ++i) {
    const double sec = i < trace.seconds.size() ? trace.seconds[i] : 0.0;
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.6f\n", i + 1, trace.objective[i], sec);
    out += buf;
  }
  return out;
}

void save_trace_csv(const SolverTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write trace '" + path.string() + "'");
  out << trace_to_csv(trace);
}

Image adjoint_convolve(const Image& img, const Kernel& k) {
  if (k.rows() > img.rows() || k.cols() > img.cols()) {
    throw ShapeError("kernel is larger than the image");
  }
  Image out(img.channels(), img.rows(), img.cols());
  par::correlate_reflect_adjoint(img.values(), {img.channels(), img.rows(), img.cols()},
                                 view_of(k), out.values());
  return out;
}

Image tv_prox(const Image& v, double lambda, std::size_t iters, TvDual* warm) {
  if (!(lambda > 0.0)) return v;
  const std::size_t rows = v.rows();
  const std::size_t cols = v.cols();
  const std::size_t plane = v.plane_size();
  const std::size_t n = v.size();

  std::vector<double> p_old(n, 0.0), q_old(n, 0.0);
  if (warm != nullptr && warm->p.size() == n && warm->q.size() == n) {
    p_old = warm->p;
    q_old = warm->q;
  }
  std::vector<double> r = p_old, s = q_old;
  std::vector<double> pn(n), qn(n), dt(plane);
  Image x(v.channels(), rows, cols);
  const double tau = 1.0 / (8.0 * lambda);
  double t = 1.0;

  auto primal = [&](const std::vector<double>& pp, const std::vector<double>& qq) {
    for (std::size_t c = 0; c < v.channels(); ++c) {
      apply_dt(pp.data() + c * plane, qq.data() + c * plane, rows, cols, dt.data());
      const auto vc = v.channel(c);
      auto xc = x.channel(c);
      for (std::size_t i = 0; i < plane; ++i) xc[i] = vc[i] - lambda * dt[i];
    }
  };

  for (std::size_t it = 0; it < iters; ++it) {
    primal(r, s);
    for (std::size_t c = 0; c < v.channels(); ++c) {
      const double* xc = x.channel(c).data();
      const std::size_t off = c * plane;
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
          const std::size_t idx = i * cols + j;
          const double gh = j + 1 < cols ? xc[idx + 1] - xc[idx] : 0.0;
          const double gv = i + 1 < rows ? xc[idx + cols] - xc[idx] : 0.0;
          const double a = r[off + idx] + tau * gh;
          const double b = s[off + idx] + tau * gv;
          const double scale = std::max(1.0, std::sqrt(a * a + b * b));
          pn[off + idx] = a / scale;
          qn[off + idx] = b / scale;
        }
      }
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double mom = (t - 1.0) / t_next;
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = pn[i] + mom * (pn[i] - p_old[i]);
      s[i] = qn[i] + mom * (qn[i] - q_old[i]);
    }
    p_old.swap(pn);
    q_old.swap(qn);
    t = t_next;
  }
  primal(p_old, q_old);
  if (warm != nullptr) {
    warm->p = std::move(p_old);
    warm->q = std::move(q_old);
  }
  return x;
}

std::vector<double> project_simplex(std::span<const double> v) {
  if (v.empty()) throw ShapeError("cannot project an empty vector onto the simplex");
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) w[i] = std::max(v[i] - theta, 0.0);
  return w;
}

double tv_objective(const Image& b, const Kernel& k, const Image& x, double alpha) {
  return mse(convolve(x, k), b) + alpha * tv_norm(x);
}

double data_lipschitz(const Kernel& k, std::size_t channels, std::size_t rows, std::size_t cols,
                      StepSizeMode mode, std::size_t power_iters) {
  const double n = static_cast<double>(channels * rows * cols);
  const par::PlaneDims dims{1, rows, cols};
  const auto f = view_of(k);
  if (mode == StepSizeMode::Fixed) {
    // Rows of A sum to 1; column sums are A^T applied to ones.
    std::vector<double> ones(rows * cols, 1.0), colsum(rows * cols);
    par::correlate_reflect_adjoint(ones, dims, f, colsum);
    const double norm1 = *std::max_element(colsum.begin(), colsum.end());
    return 2.0 / n * norm1;
  }
  std::vector<double> tmp(rows * cols);
  const double sq = power_estimate(rows * cols, power_iters,
                                   [&](std::span<const double> in, std::span<double> out) {
                                     par::correlate_reflect(in, dims, f, tmp);
                                     par::correlate_reflect_adjoint(tmp, dims, f, out);
                                   });
  return 2.0 / n * sq * kPowerSafety;
}

TvResult tv_deconv(const Image& b, const Kernel& k, const BaselineConfig& cfg,
                   const std::optional<Image>& init) {
  if (!(cfg.alpha >= 0.0) || !std::isfinite(cfg.alpha)) throw ConfigError("alpha must be >= 0");
  if (k.rows() > b.rows() || k.cols() > b.cols()) {
    throw ShapeError("kernel is larger than the observation");
  }
  if (init && !init->same_shape(b)) throw ShapeError("initial image does not match observation");
  const auto start = Clock::now();

  double lipschitz =
      data_lipschitz(k, b.channels(), b.rows(), b.cols(), cfg.step_size_mode, cfg.power_iters);
  if (!(lipschitz > 0.0)) throw ValueError("data term has a zero Lipschitz constant");

  Image x = init ? *init : b;
  Image x_prev = x;
  Image y = x;
  double f_prev = tv_objective(b, k, x, cfg.alpha);
  if (!std::isfinite(f_prev)) throw DivergenceError(0, "non-finite initial TV objective");
  double t = 1.0;
  TvDual dual;
  TvResult result{x, {}};

  for (std::size_t it = 1; it <= cfg.inner_iters_x; ++it) {
    const Image grad = data_gradient(y, k, b);
    Image z;
    double fz = 0.0;
    int halvings = 0;
    for (;;) {
      Image step = y;
      auto sv = step.values();
      const auto gv = grad.values();
      for (std::size_t i = 0; i < sv.size(); ++i) sv[i] -= gv[i] / lipschitz;
      TvDual trial = dual;
      z = tv_prox(step, cfg.alpha / lipschitz, cfg.prox_iters, &trial);
      fz = tv_objective(b, k, z, cfg.alpha);
      if (std::isfinite(fz)) {
        dual = std::move(trial);
        break;
      }
      if (++halvings > kMaxStepHalvings) {
        throw DivergenceError(it, "TV objective is not finite after step-size halving");
      }
      lipschitz *= 2.0;
    }

    // Monotone acceptance: keep the previous iterate if z is worse.
    if (fz <= f_prev) {
      x = z;
      f_prev = fz;
    } else {
      x = x_prev;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    auto yv = y.values();
    const auto xv = x.values();
    const auto zv = z.values();
    const auto pv = x_prev.values();
    for (std::size_t i = 0; i < yv.size(); ++i) {
      yv[i] = xv[i] + (t / t_next) * (zv[i] - xv[i]) + ((t - 1.0) / t_next) * (xv[i] - pv[i]);
    }
    x_prev = x;
    t = t_next;
    result.trace.objective.push_back(f_prev);
    result.trace.seconds.push_back(seconds_since(start));
  }
  result.image = std::move(x);
  return result;
}

namespace {

// Projected proximal gradient on K for mse(X * K, B) + beta ||K||_1 over the
// simplex. On the nonnegative orthant the L1 prox is a uniform shift by
// step * beta; the simplex projection then clips and renormalizes.
Kernel update_kernel(const Image& x, const Image& b, const Kernel& k, const BaselineConfig& cfg) {
  const par::PlaneDims dims{x.channels(), x.rows(), x.cols()};
  const std::size_t taps = k.size();
  const double n = static_cast<double>(b.size());
  const KernelCenter center = k.center();
  auto filter = [&](std::span<const double> w) {
    return par::FilterView{w, k.rows(), k.cols(), center.row, center.col};
  };

  std::vector<double> field(x.size());
  const double sq = power_estimate(taps, cfg.power_iters,
                                   [&](std::span<const double> in, std::span<double> out) {
                                     par::correlate_reflect(x.values(), dims, filter(in), field);
                                     par::correlate_reflect_filter_grad(x.values(), field, dims,
                                                                        filter(in), out);
                                   });
  if (!(sq > 0.0)) return k;
  const double step = 1.0 / (2.0 / n * sq * kPowerSafety);

  std::vector<double> w(k.values().begin(), k.values().end());
  std::vector<double> grad(taps);
  const auto bv = b.values();
  for (std::size_t it = 0; it < cfg.inner_iters_k; ++it) {
    par::correlate_reflect(x.values(), dims, filter(w), field);
    for (std::size_t i = 0; i < field.size(); ++i) field[i] -= bv[i];
    par::correlate_reflect_filter_grad(x.values(), field, dims, filter(w), grad);
    for (std::size_t i = 0; i < taps; ++i) {
      w[i] -= step * (2.0 / n * grad[i]) + step * cfg.beta;
    }
    w = project_simplex(w);
  }
  return Kernel::normalize(k.rows(), k.cols(), std::move(w), center);
}

}  // namespace

BlindResult blind_tv_l1(const Image& b, const BaselineConfig& cfg, const Kernel& init_k) {
  cfg.validate();
  if (init_k.rows() > b.rows() || init_k.cols() > b.cols()) {
    throw ShapeError("initial kernel is larger than the observation");
  }
  const auto start = Clock::now();
  BlindResult result{b, init_k, {}};
  for (std::size_t round = 1; round <= cfg.outer_iters; ++round) {
    result.image = tv_deconv(b, result.kernel, cfg, result.image).image;
    result.kernel = update_kernel(result.image, b, result.kernel, cfg);
    const double objective = tv_objective(b, result.kernel, result.image, cfg.alpha) +
                             cfg.beta * l1_norm(result.kernel.values());
    if (!std::isfinite(objective)) {
      throw DivergenceError(round, "blind TV-L1 objective is not finite");
    }
    result.trace.objective.push_back(objective);
    result.trace.seconds.push_back(seconds_since(start));
  }
  return result;
}

}  // namespace dikp::baseline
