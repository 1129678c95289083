#include "dikp/hourglass.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "dikp/error.hpp"

namespace dikp::nn {

namespace {

constexpr char kMagic[8] = {'D', 'I', 'K', 'P', 'N', 'E', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view blob) : blob_(blob) {}

  std::uint64_t u(int bytes) {
    if (pos_ + static_cast<std::size_t>(bytes) > blob_.size()) throw IoError("checkpoint is truncated");
    std::uint64_t v = 0;
    for (int b = 0; b < bytes; ++b)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(blob_[pos_ + b])) << (8 * b);
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }
  std::string_view take(std::size_t n) {
    if (pos_ + n > blob_.size()) throw IoError("checkpoint is truncated");
    auto s = blob_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == blob_.size(); }

 private:
  std::string_view blob_;
  std::size_t pos_ = 0;
};

}  // namespace

HourglassConfig HourglassConfig::image_net(std::size_t channels, std::size_t rows, std::size_t cols,
                                           std::size_t width) {
  HourglassConfig cfg;
  cfg.n_down.assign(cfg.depth, width);
  cfg.n_up.assign(cfg.depth, width);
  cfg.output_channels = channels;
  cfg.input_rows = rows;
  cfg.input_cols = cols;
  return cfg;
}

HourglassConfig HourglassConfig::kernel_net(std::size_t rows, std::size_t cols, std::size_t width) {
  HourglassConfig cfg;
  cfg.n_down.assign(cfg.depth, width);
  cfg.n_up.assign(cfg.depth, width);
  cfg.down_stride = 1;
  cfg.output_activation = OutputActivation::Softmax;
  cfg.input_channels = 8;
  cfg.output_channels = 1;
  cfg.input_rows = rows;
  cfg.input_cols = cols;
  return cfg;
}

void HourglassConfig::validate() const {
  if (depth == 0) throw ConfigError("hourglass depth must be positive");
  for (const auto* list : {&n_down, &n_up, &k_down, &k_up, &n_skip, &k_skip}) {
    if (list->size() != depth) throw ConfigError("hourglass per-level lists must have length depth");
  }
  for (std::size_t i = 0; i < depth; ++i) {
    if (n_down[i] == 0 || n_up[i] == 0) throw ConfigError("hourglass filter counts must be positive");
    for (std::size_t k : {k_down[i], k_up[i], k_skip[i]}) {
      if (k % 2 == 0) throw ConfigError("hourglass kernel sizes must be odd");
    }
  }
  if (down_stride != 1 && down_stride != 2) throw ConfigError("down_stride must be 1 or 2");
  if (input_channels == 0 || output_channels == 0) throw ConfigError("channel counts must be positive");
  if (input_rows == 0 || input_cols == 0) throw ConfigError("input size must be positive");
  if (down_stride == 2) {
    const std::size_t unit = std::size_t{1} << depth;
    if (input_rows % unit != 0 || input_cols % unit != 0) {
      throw ConfigError("stride-2 hourglass input must be a multiple of " + std::to_string(unit) +
                        ", got " + std::to_string(input_rows) + "x" + std::to_string(input_cols));
    }
  }
}

std::size_t Network::parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.size();
  return total;
}

ag::Shape Network::input_shape() const {
  return {1, cfg_.input_channels, cfg_.input_rows, cfg_.input_cols};
}

ag::Shape Network::output_shape() const {
  return {1, cfg_.output_channels, cfg_.input_rows, cfg_.input_cols};
}

ag::Tensor Network::conv_block(const Conv& conv, const Norm& norm, const ag::Tensor& x) const {
  auto y = ag::conv2d(x, conv.weight, conv.bias, conv.stride);
  y = ag::instance_norm(y, norm.gain, norm.bias);
  return ag::leaky_relu(y, cfg_.leaky_slope);
}

ag::Tensor Network::run_level(std::size_t i, const ag::Tensor& h) const {
  const Level& L = levels_[i];
  auto d = conv_block(L.down1, L.down1_norm, h);
  d = conv_block(L.down2, L.down2_norm, d);
  auto deeper = i + 1 < levels_.size() ? run_level(i + 1, d) : d;
  if (cfg_.down_stride == 2) deeper = ag::upsample_nearest(deeper, 2);
  auto merged = L.has_skip ? ag::concat_channels(conv_block(L.skip, L.skip_norm, h), deeper) : deeper;
  merged = ag::instance_norm(merged, L.cat_norm.gain, L.cat_norm.bias);
  auto u = conv_block(L.up1, L.up1_norm, merged);
  return conv_block(L.up2, L.up2_norm, u);
}

ag::Tensor Network::forward(const ag::Tensor& input) const {
  if (!(input.shape() == input_shape())) {
    throw ShapeError("hourglass expects input " + input_shape().str() + ", got " +
                     input.shape().str());
  }
  auto y = run_level(0, input);
  y = ag::conv2d(y, head_.weight, head_.bias, 1);
  return cfg_.output_activation == OutputActivation::Sigmoid ? ag::sigmoid(y) : ag::softmax_all(y);
}

Network build_hourglass(const HourglassConfig& cfg, Rng& rng) {
  cfg.validate();
  Network net;
  net.cfg_ = cfg;

  auto conv = [&](std::size_t cin, std::size_t cout, std::size_t k, std::size_t stride) {
    const double a = std::sqrt(1.0 / static_cast<double>(cin * k * k));
    std::vector<double> w(cout * cin * k * k);
    for (double& v : w) v = rng.uniform(-a, a);
    std::vector<double> b(cout);
    for (double& v : b) v = rng.uniform(-a, a);
    Network::Conv c{ag::Tensor::parameter({cout, cin, k, k}, std::move(w)),
                    ag::Tensor::parameter({1, cout, 1, 1}, std::move(b)), stride};
    net.params_.push_back(c.weight);
    net.params_.push_back(c.bias);
    return c;
  };
  auto norm = [&](std::size_t channels) {
    Network::Norm n{ag::Tensor::parameter({1, channels, 1, 1}, std::vector<double>(channels, 1.0)),
                    ag::Tensor::parameter({1, channels, 1, 1}, std::vector<double>(channels, 0.0))};
    net.params_.push_back(n.gain);
    net.params_.push_back(n.bias);
    return n;
  };

  net.levels_.resize(cfg.depth);
  // Build encoder first so parameter order follows the data path downwards.
  std::size_t cin = cfg.input_channels;
  for (std::size_t i = 0; i < cfg.depth; ++i) {
    auto& L = net.levels_[i];
    L.has_skip = cfg.n_skip[i] > 0;
    if (L.has_skip) {
      L.skip = conv(cin, cfg.n_skip[i], cfg.k_skip[i], 1);
      L.skip_norm = norm(cfg.n_skip[i]);
    }
    L.down1 = conv(cin, cfg.n_down[i], cfg.k_down[i], cfg.down_stride);
    L.down1_norm = norm(cfg.n_down[i]);
    L.down2 = conv(cfg.n_down[i], cfg.n_down[i], cfg.k_down[i], 1);
    L.down2_norm = norm(cfg.n_down[i]);
    cin = cfg.n_down[i];
  }
  for (std::size_t r = cfg.depth; r-- > 0;) {
    auto& L = net.levels_[r];
    const std::size_t deeper = r + 1 < cfg.depth ? cfg.n_up[r + 1] : cfg.n_down[r];
    const std::size_t merged = deeper + cfg.n_skip[r];
    L.cat_norm = norm(merged);
    L.up1 = conv(merged, cfg.n_up[r], cfg.k_up[r], 1);
    L.up1_norm = norm(cfg.n_up[r]);
    L.up2 = conv(cfg.n_up[r], cfg.n_up[r], 1, 1);
    L.up2_norm = norm(cfg.n_up[r]);
  }
  net.head_ = conv(cfg.n_up[0], cfg.output_channels, 1, 1);
  return net;
}

std::string serialize_parameters(const Network& net) {
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(net.parameters().size()));
  for (const auto& p : net.parameters()) {
    const auto& s = p.shape();
    for (std::size_t d : {s.n, s.c, s.h, s.w}) put_u64(out, d);
  }
  for (const auto& p : net.parameters()) {
    for (double v : p.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

void deserialize_parameters(Network& net, std::string_view blob) {
  Reader in(blob);
  if (in.take(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic))) {
    throw IoError("not a network checkpoint");
  }
  const auto version = in.u(4);
  if (version != kVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  auto& params = net.parameters();
  const auto count = in.u(4);
  if (count != params.size()) {
    throw ShapeError("checkpoint holds " + std::to_string(count) + " tensors, network has " +
                     std::to_string(params.size()));
  }
  for (const auto& p : params) {
    ag::Shape s{in.u(8), in.u(8), in.u(8), in.u(8)};
    if (!(s == p.shape())) {
      throw ShapeError("checkpoint tensor " + s.str() + " does not match " + p.shape().str());
    }
  }
  std::vector<std::vector<double>> values;
  for (const auto& p : params) {
    std::vector<double> v(p.size());
    for (double& x : v) x = std::bit_cast<double>(in.u(8));
    values.push_back(std::move(v));
  }
  if (!in.done()) throw IoError("trailing bytes after checkpoint payload");
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto dst = params[k].mutable_data();
    std::copy(values[k].begin(), values[k].end(), dst.begin());
  }
}

}  // namespace dikp::nn
