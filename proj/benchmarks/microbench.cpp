// Per-kernel-size timings for the box layer against its dense equivalents.
// The CLI bench command produces the CSV used for cost comparisons; these are
// for profiling individual paths.

#include <benchmark/benchmark.h>

#include <random>

#include "satconv/box_conv.hpp"
#include "satconv/reference.hpp"
#include "satconv/sat.hpp"

namespace {

using namespace satconv;

FeatureMap input(std::size_t channels, std::size_t size) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FeatureMap fm(channels, size, size);
  for (auto& v : fm.data()) v = u(rng);
  return fm;
}

void BM_SatBuild(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const FeatureMap x = input(1, n);
  for (auto _ : state) benchmark::DoNotOptimize(build_sat(x, 0));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_SatBuild)->Arg(64)->Arg(256)->Arg(1024);

void BM_BoxForward(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const auto variant = static_cast<BoxVariant>(state.range(1));
  BoxRng rng(static_cast<std::uint64_t>(k));
  const BoxConvLayer layer = BoxConvLayer::random(1, k, variant, rng);
  const FeatureMap x = input(1, 256);
  for (auto _ : state) benchmark::DoNotOptimize(apply_box_conv(layer, x));
  state.counters["multadds_per_px"] =
      static_cast<double>(multadd_count(layer, x.shape())) / static_cast<double>(x.size());
}
BENCHMARK(BM_BoxForward)
    ->ArgsProduct({{7, 13, 21, 41}, {static_cast<int>(BoxVariant::Single)}})
    ->Args({13, static_cast<int>(BoxVariant::SplitH)})
    ->Args({13, static_cast<int>(BoxVariant::Split4)})
    ->Unit(benchmark::kMicrosecond);

void BM_BoxForwardBackward(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  BoxRng rng(static_cast<std::uint64_t>(k));
  const BoxConvLayer layer = BoxConvLayer::random(8, k, BoxVariant::Single, rng);
  const FeatureMap x = input(8, 64);
  const FeatureMap g = input(8, 64);
  for (auto _ : state) {
    const ForwardResult f = forward(layer, x);
    benchmark::DoNotOptimize(backward(layer, f.saved, g));
  }
}
BENCHMARK(BM_BoxForwardBackward)->Arg(7)->Arg(21)->Unit(benchmark::kMicrosecond);

void BM_NaiveDense(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  BoxRng rng(static_cast<std::uint64_t>(k));
  const DenseKernel kernel = effective_kernel(init_params(k, BoxVariant::Single, rng));
  const FeatureMap x = input(1, 256);
  for (auto _ : state) {
    benchmark::DoNotOptimize(naive_conv<double>(x.plane(0), x.height(), x.width(), kernel));
  }
}
BENCHMARK(BM_NaiveDense)->Arg(7)->Arg(13)->Arg(21)->Unit(benchmark::kMicrosecond);

// 4x4 taps at dilation 4 span 13 pixels, the same extent as a k=13 box.
void BM_Dilated4x4(benchmark::State& state) {
  DenseKernel kernel(4, static_cast<int>(state.range(0)));
  for (auto& w : kernel.weights) w = 1.0 / 16.0;
  const FeatureMap x = input(1, 256);
  for (auto _ : state) {
    benchmark::DoNotOptimize(naive_conv<double>(x.plane(0), x.height(), x.width(), kernel));
  }
}
BENCHMARK(BM_Dilated4x4)->Arg(2)->Arg(4)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
