#include "dikp/rng.hpp"

#include <cmath>
#include <numbers>

#include "dikp/error.hpp"

namespace dikp {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t finalize(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) noexcept {
  return finalize(finalize(seed + kGolden) ^ (stream * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), key_(derive_key(seed, stream)) {}

std::uint64_t Rng::next_u64() noexcept {
  ++counter_;
  return finalize(key_ + counter_ * kGolden);
}

double Rng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() noexcept {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

Rng Rng::split(std::uint64_t stream_id) const noexcept {
  // Child seed mixes in the parent's key so nested splits stay distinct.
  return Rng(key_, stream_id);
}

std::vector<double> gaussian_noise(Rng& rng, std::size_t count, double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ValueError("noise standard deviation must be finite and nonnegative");
  }
  std::vector<double> out(count, 0.0);
  if (sigma == 0.0) return out;
  for (double& v : out) v = sigma * rng.normal();
  return out;
}

}  // namespace dikp
