// OpenMP kernels against the serial loops in reference/.

#include <benchmark/benchmark.h>

#include <vector>

#include "dikp/autograd.hpp"
#include "dikp/parallel_kernels.hpp"
#include "dikp/rng.hpp"
#include "serial_kernels.hpp"

using namespace dikp;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform();
  return v;
}

struct CorrelateCase {
  par::PlaneDims dims;
  std::vector<double> x, taps, out;
  par::FilterView f;
  explicit CorrelateCase(std::size_t side)
      : dims{3, side, side}, x(random_values(dims.size(), 1)), taps(random_values(81, 2)), out(dims.size()) {
    f = {taps, 9, 9, 4, 4};
  }
};

void BM_CorrelatePar(benchmark::State& st) {
  CorrelateCase c(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) {
    par::correlate_reflect(c.x, c.dims, c.f, c.out);
    benchmark::DoNotOptimize(c.out.data());
  }
}

void BM_CorrelateSerial(benchmark::State& st) {
  CorrelateCase c(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) {
    serial::correlate_reflect(c.x, c.dims, c.f, c.out);
    benchmark::DoNotOptimize(c.out.data());
  }
}

void BM_CorrelateAdjointPar(benchmark::State& st) {
  CorrelateCase c(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) {
    par::correlate_reflect_adjoint(c.x, c.dims, c.f, c.out);
    benchmark::DoNotOptimize(c.out.data());
  }
}

void BM_CorrelateAdjointSerial(benchmark::State& st) {
  CorrelateCase c(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) {
    serial::correlate_reflect_adjoint(c.x, c.dims, c.f, c.out);
    benchmark::DoNotOptimize(c.out.data());
  }
}

// Hourglass-sized layer: width x side x side, 3x3 kernel.
constexpr std::size_t kWidth = 16;

void BM_Conv2dIm2col(benchmark::State& st) {
  const auto side = static_cast<std::size_t>(st.range(0));
  const ag::NoGradGuard guard;
  const auto x = ag::Tensor::constant({1, kWidth, side, side}, random_values(kWidth * side * side, 3));
  const auto w = ag::Tensor::constant({kWidth, kWidth, 3, 3}, random_values(kWidth * kWidth * 9, 4));
  const auto b = ag::Tensor::constant({1, kWidth, 1, 1}, random_values(kWidth, 5));
  for (auto _ : st) benchmark::DoNotOptimize(ag::conv2d(x, w, b, 1).data().data());
}

void BM_Conv2dDirectSerial(benchmark::State& st) {
  const auto side = static_cast<std::size_t>(st.range(0));
  const auto x = random_values(kWidth * side * side, 3);
  const auto w = random_values(kWidth * kWidth * 9, 4);
  const auto b = random_values(kWidth, 5);
  std::vector<double> out(kWidth * side * side);
  const par::ConvGeometry g{{kWidth, side, side}, 3, 1, 1};
  for (auto _ : st) {
    serial::conv2d_direct(x, g, w, b, kWidth, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_CorrelatePar)->Arg(64)->Arg(256);
BENCHMARK(BM_CorrelateSerial)->Arg(64)->Arg(256);
BENCHMARK(BM_CorrelateAdjointPar)->Arg(64)->Arg(256);
BENCHMARK(BM_CorrelateAdjointSerial)->Arg(64)->Arg(256);
BENCHMARK(BM_Conv2dIm2col)->Arg(32)->Arg(64);
BENCHMARK(BM_Conv2dDirectSerial)->Arg(32)->Arg(64);

BENCHMARK_MAIN();
