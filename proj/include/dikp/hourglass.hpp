#pragma once

// Encoder-decoder generator with skip connections.
//
// Level i takes h_{i-1} and produces a map at the same resolution:
//   skip   s_i = conv(k_s, n_s) -> IN -> LReLU                        on h_{i-1}
//   down   d_i = conv(k_d, stride) -> IN -> LReLU -> conv(k_d) -> IN -> LReLU
//   deeper e_i = level i+1 applied to d_i (d_i itself at the last level)
//   up     u_i = concat(s_i, upsample(e_i)) -> IN -> conv(k_u, n_u) -> IN -> LReLU
//                -> conv(1, n_u) -> IN -> LReLU
// Upsampling happens only for stride 2. The head is a 1x1 conv to the output
// channel count followed by sigmoid or a global softmax.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "dikp/autograd.hpp"
#include "dikp/rng.hpp"

namespace dikp::nn {

enum class OutputActivation { Sigmoid, Softmax };

struct HourglassConfig {
  std::size_t depth = 5;
  std::vector<std::size_t> n_down = std::vector<std::size_t>(5, 128);
  std::vector<std::size_t> n_up = std::vector<std::size_t>(5, 128);
  std::vector<std::size_t> k_down = std::vector<std::size_t>(5, 3);
  std::vector<std::size_t> k_up = std::vector<std::size_t>(5, 3);
  std::vector<std::size_t> n_skip = std::vector<std::size_t>(5, 4);
  std::vector<std::size_t> k_skip = std::vector<std::size_t>(5, 1);
  std::size_t down_stride = 2;
  OutputActivation output_activation = OutputActivation::Sigmoid;
  std::size_t input_channels = 32;
  std::size_t output_channels = 1;
  std::size_t input_rows = 64;
  std::size_t input_cols = 64;
  double leaky_slope = 0.1;

  /// Stride-2 sigmoid generator for a (channels, rows, cols) image, every
  /// level `width` filters wide.
  static HourglassConfig image_net(std::size_t channels, std::size_t rows, std::size_t cols,
                                   std::size_t width = 128);
  /// Stride-1 softmax generator for a rows x cols kernel.
  static HourglassConfig kernel_net(std::size_t rows = 9, std::size_t cols = 9,
                                    std::size_t width = 128);

  /// Throws ConfigError.
  void validate() const;
};

class Network {
 public:
  const HourglassConfig& config() const noexcept { return cfg_; }
  /// Every trainable leaf in a fixed construction order.
  const std::vector<ag::Tensor>& parameters() const noexcept { return params_; }
  std::vector<ag::Tensor>& parameters() noexcept { return params_; }
  std::size_t parameter_count() const;
  ag::Shape input_shape() const;
  ag::Shape output_shape() const;

  ag::Tensor forward(const ag::Tensor& input) const;

 private:
  friend Network build_hourglass(const HourglassConfig& cfg, Rng& rng);

  struct Conv {
    ag::Tensor weight;
    ag::Tensor bias;
    std::size_t stride = 1;
  };
  struct Norm {
    ag::Tensor gain;
    ag::Tensor bias;
  };
  struct Level {
    bool has_skip = false;
    Conv skip;
    Norm skip_norm;
    Conv down1;
    Norm down1_norm;
    Conv down2;
    Norm down2_norm;
    Norm cat_norm;
    Conv up1;
    Norm up1_norm;
    Conv up2;
    Norm up2_norm;
  };

  ag::Tensor run_level(std::size_t i, const ag::Tensor& h) const;
  ag::Tensor conv_block(const Conv& conv, const Norm& norm, const ag::Tensor& x) const;

  HourglassConfig cfg_;
  std::vector<Level> levels_;
  Conv head_;
  std::vector<ag::Tensor> params_;
};

/// Weights and biases ~ U(-a, a), a = sqrt(1 / fan_in); norm gains 1, biases 0.
Network build_hourglass(const HourglassConfig& cfg, Rng& rng);

/// Versioned checkpoint: magic, version, tensor count, per-tensor shape
/// (4 x u64) then little-endian f64 values.
std::string serialize_parameters(const Network& net);
/// Overwrites the parameters of `net`; throws IoError on a malformed blob or
/// ShapeError if the shape table does not match.
void deserialize_parameters(Network& net, std::string_view blob);

}  // namespace dikp::nn
