#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace dikp {

/// Counter-based generator.
///
/// Draw number c of a stream with key k is splitmix64_finalize(k + (c + 1) * phi),
/// phi = 0x9e3779b97f4a7c15, i.e. SplitMix64 evaluated at an explicit counter.
/// The key is derived from (seed, stream) by the same finalizer, so split()
/// yields independent, reproducible streams without shared state. Only
/// integer arithmetic is involved in producing raw bits, so streams are
/// identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal via the Box-Muller transform; values come in pairs.
  double normal() noexcept;

  /// Independent child stream. The parent is not advanced.
  Rng split(std::uint64_t stream_id) const noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// `count` i.i.d. N(0, sigma^2) samples drawn from `rng`. sigma = 0 yields
/// zeros without consuming the stream.
std::vector<double> gaussian_noise(Rng& rng, std::size_t count, double sigma);

}  // namespace dikp
