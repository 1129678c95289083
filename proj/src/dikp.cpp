#include "dikp/dikp.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "dikp/adam.hpp"
#include "dikp/degrade.hpp"
#include "dikp/error.hpp"
#include "dikp/rng.hpp"

namespace dikp {

namespace {

enum Stream : std::uint64_t {
  kImageWeights = 1,
  kImageInput = 2,
  kPerturb = 3,
  kKernelWeights = 4,
  kKernelInput = 5,
};

std::vector<double> uniform_input(Rng rng, std::size_t count, double scale) {
  std::vector<double> z(count);
  for (double& v : z) v = rng.uniform(0.0, scale);
  return z;
}

ag::Tensor perturbed(const ag::Shape& shape, const std::vector<double>& z, Rng& rng, double sigma) {
  if (sigma == 0.0) return ag::Tensor::constant(shape, z);
  auto noise = gaussian_noise(rng, z.size(), sigma);
  for (std::size_t i = 0; i < z.size(); ++i) noise[i] += z[i];
  return ag::Tensor::constant(shape, std::move(noise));
}

std::vector<std::vector<double>> snapshot(const std::vector<ag::Tensor>& params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.data().begin(), p.data().end());
  return out;
}

void restore(std::vector<ag::Tensor>& params, const std::vector<std::vector<double>>& values) {
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto dst = params[k].mutable_data();
    std::copy(values[k].begin(), values[k].end(), dst.begin());
  }
}

nn::HourglassConfig fit_image_net(const DikpConfig& cfg, const Image& b) {
  nn::HourglassConfig net = cfg.image_net;
  net.output_channels = b.channels();
  net.input_rows = b.rows();
  net.input_cols = b.cols();
  net.validate();
  return net;
}

Image to_image(const ag::Tensor& t) {
  const auto& s = t.shape();
  return Image(s.c, s.h, s.w, std::vector<double>(t.data().begin(), t.data().end()));
}

Kernel to_kernel(const ag::Tensor& t) {
  const auto& s = t.shape();
  return Kernel::normalize(s.h, s.w, std::vector<double>(t.data().begin(), t.data().end()),
                           {s.h / 2, s.w / 2});
}

class Tracker {
 public:
  Tracker(const DikpConfig& cfg, DikpResult& result) : every_(cfg.track_every), result_(result) {}

  /// Returns true when `energy` is a new minimum.
  bool record(std::size_t it, double energy) {
    if (!std::isfinite(energy)) throw DivergenceError(it, "non-finite energy");
    if (it % every_ == 0) {
      result_.trace.push_back(energy);
      result_.trace_iters.push_back(it);
    }
    if (it == 0 || energy < result_.best_energy) {
      result_.best_energy = energy;
      result_.best_iter = it;
      return true;
    }
    return false;
  }

 private:
  std::size_t every_;
  DikpResult& result_;
};

}  // namespace

void DikpConfig::validate() const {
  if (iters < 1) throw ConfigError("iters must be at least 1");
  if (!(perturb_sigma >= 0.0)) throw ConfigError("perturb_sigma must be nonnegative");
  if (!(input_noise_scale > 0.0)) throw ConfigError("input_noise_scale must be positive");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (track_every < 1) throw ConfigError("track_every must be at least 1");
}

std::string energy_trace_to_csv(const DikpResult& result) {
  std::string out = "iter,energy\n";
  char buf[64];
  for (std::size_t k = 0; k < result.trace.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", result.trace_iters[k], result.trace[k]);
    out += buf;
  }
  return out;
}

void save_energy_trace_csv(const DikpResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write trace '" + path.string() + "'");
  out << energy_trace_to_csv(result);
}

DikpResult dikp_deconv(const Image& b, const Kernel& k, const DikpConfig& cfg) {
  cfg.validate();
  if (k.center() != KernelCenter{k.rows() / 2, k.cols() / 2}) {
    throw ConfigError("dikp_deconv needs a centered kernel");
  }
  if (k.rows() > b.rows() || k.cols() > b.cols()) throw ShapeError("kernel larger than image");

  Rng root(cfg.seed);
  Rng weight_rng = root.split(kImageWeights);
  Rng perturb_rng = root.split(kPerturb);
  auto net = nn::build_hourglass(fit_image_net(cfg, b), weight_rng);
  const auto in_shape = net.input_shape();
  const auto z = uniform_input(root.split(kImageInput), in_shape.size(), cfg.input_noise_scale);

  const auto target = ag::Tensor::constant(net.output_shape(), {b.values().begin(), b.values().end()});
  const auto kernel = ag::Tensor::constant({1, 1, k.rows(), k.cols()}, {k.values().begin(), k.values().end()});

  auto& params = net.parameters();
  AdamState adam(cfg.lr, std::span<const ag::Tensor>(params));
  DikpResult result;
  Tracker tracker(cfg, result);
  std::vector<std::vector<double>> best;

  for (std::size_t it = 0; it < cfg.iters; ++it) {
    for (auto& p : params) p.zero_grad();
    const auto x = net.forward(perturbed(in_shape, z, perturb_rng, cfg.perturb_sigma));
    const auto loss = ag::mse_loss(ag::convolve_reflect(x, kernel), target);
    if (tracker.record(it, loss.item())) best = snapshot(params);
    ag::backward(loss);
    adam_step(adam, params);
  }

  restore(params, best);
  ag::NoGradGuard no_grad;
  result.image = to_image(net.forward(ag::Tensor::constant(in_shape, z)));
  return result;
}

DikpResult dikp_blind(const Image& b, const DikpConfig& cfg, const KernelObserver& observer) {
  cfg.validate();
  nn::HourglassConfig kcfg = cfg.kernel_net;
  kcfg.validate();
  if (kcfg.output_activation != nn::OutputActivation::Softmax || kcfg.output_channels != 1) {
    throw ConfigError("kernel generator needs a single-channel softmax head");
  }
  if (kcfg.input_rows % 2 == 0 || kcfg.input_cols % 2 == 0) throw ConfigError("kernel size must be odd");
  if (kcfg.input_rows > b.rows() || kcfg.input_cols > b.cols()) throw ShapeError("kernel larger than image");

  Rng root(cfg.seed);
  Rng image_weight_rng = root.split(kImageWeights);
  Rng kernel_weight_rng = root.split(kKernelWeights);
  Rng perturb_rng = root.split(kPerturb);
  auto fnet = nn::build_hourglass(fit_image_net(cfg, b), image_weight_rng);
  auto gnet = nn::build_hourglass(kcfg, kernel_weight_rng);
  const auto f_shape = fnet.input_shape();
  const auto g_shape = gnet.input_shape();
  const auto zf = uniform_input(root.split(kImageInput), f_shape.size(), cfg.input_noise_scale);
  const auto zg = uniform_input(root.split(kKernelInput), g_shape.size(), cfg.input_noise_scale);

  const auto target = ag::Tensor::constant(fnet.output_shape(), {b.values().begin(), b.values().end()});

  std::vector<ag::Tensor> params = fnet.parameters();
  params.insert(params.end(), gnet.parameters().begin(), gnet.parameters().end());
  AdamState adam(cfg.lr, std::span<const ag::Tensor>(params));
  DikpResult result;
  Tracker tracker(cfg, result);
  std::vector<std::vector<double>> best;

  for (std::size_t it = 0; it < cfg.iters; ++it) {
    for (auto& p : params) p.zero_grad();
    const auto x = fnet.forward(perturbed(f_shape, zf, perturb_rng, cfg.perturb_sigma));
    const auto kt = gnet.forward(perturbed(g_shape, zg, perturb_rng, cfg.perturb_sigma));
    const auto loss = ag::mse_loss(ag::convolve_reflect(x, kt), target);
    if (observer) observer(it, to_kernel(kt));
    if (tracker.record(it, loss.item())) best = snapshot(params);
    ag::backward(loss);
    adam_step(adam, params);
  }

  restore(params, best);
  ag::NoGradGuard no_grad;
  result.image = to_image(fnet.forward(ag::Tensor::constant(f_shape, zf)));
  result.kernel = to_kernel(gnet.forward(ag::Tensor::constant(g_shape, zg)));
  return result;
}

std::vector<ConvergenceTrace> convergence_bias_experiment(
    const std::vector<std::pair<std::string, Image>>& targets, const Kernel& k, const DikpConfig& cfg) {
  if (targets.empty()) throw ValueError("convergence experiment needs at least one target");
  for (const auto& [label, img] : targets) {
    if (!img.same_shape(targets.front().second)) {
      throw ShapeError("convergence targets must share one shape ('" + label + "' differs)");
    }
  }
  DikpConfig run = cfg;
  run.track_every = 1;
  std::vector<ConvergenceTrace> traces;
  for (const auto& [label, img] : targets) {
    const Image b = degrade(img, k, 0.01, cfg.seed);
    traces.push_back({label, dikp_deconv(b, k, run).trace});
  }
  return traces;
}

Image gaussian_noise_image(std::size_t channels, std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Image img(channels, rows, cols, gaussian_noise(rng, channels * rows * cols, 1.0));
  img.clamp();
  return img;
}

Image uniform_noise_image(std::size_t channels, std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(channels * rows * cols);
  for (double& x : v) x = rng.uniform();
  return Image(channels, rows, cols, std::move(v));
}

}  // namespace dikp
