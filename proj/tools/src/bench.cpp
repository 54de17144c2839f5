#include "satconv/tools/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>
#include <random>
#include <stdexcept>

#include "satconv/box_conv.hpp"
#include "satconv/errors.hpp"
#include "satconv/reference.hpp"
#include "satconv/sat.hpp"

namespace satconv::tools {

namespace {

template <typename F>
double time_ms(const BenchOptions& o, F&& body) {
  for (std::size_t i = 0; i < o.warmup; ++i) body();
  std::vector<double> samples;
  samples.reserve(o.repeats);
  for (std::size_t i = 0; i < o.repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    const auto t1 = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return median(std::move(samples));
}

double sum(const FeatureMap& m) {
  double s = 0.0;
  for (double v : m.data()) s += v;
  return s;
}

}  // namespace

double median(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("median of no samples");
  std::ranges::sort(samples);
  const std::size_t n = samples.size();
  return n % 2 == 1 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

std::vector<BenchResult> run_bench(const BenchOptions& o) {
  if (o.repeats < 1) throw ContractViolation("bench: repeats must be positive");
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FeatureMap input(o.channels, o.height, o.width);
  for (double& v : input.data()) v = u(rng);
  const Shape shape = input.shape();
  const std::uint64_t pixels = static_cast<std::uint64_t>(o.height * o.width * o.channels);
  const ExecOptions exec{o.threads};

  std::vector<BenchResult> rows;
  for (int k : o.kernels) {
    check_kernel_size(k);
    BoxRng box_rng(o.seed + static_cast<std::uint64_t>(k));
    const BoxConvLayer layer = BoxConvLayer::random(o.channels, k, BoxVariant::Single, box_rng);
    const BenchResult base{"", k, o.channels, o.height, o.width, 0.0, 0, 0.0};

    FeatureMap out;
    BenchResult box = base;
    box.method = "box_sat";
    box.wall_ms = time_ms(o, [&] { out = apply_box_conv(layer, input, exec); });
    box.multadds = multadd_count(layer, shape);
    box.checksum = sum(out);
    rows.push_back(box);

    BenchResult build = base;
    build.method = "box_sat_build";
    double sat_sum = 0.0;
    build.wall_ms = time_ms(o, [&] {
      sat_sum = 0.0;
      for (std::size_t c = 0; c < o.channels; ++c) sat_sum += build_sat(input, c).at(o.height, o.width);
    });
    // A running row sum then a column pass: two additions per pixel.
    build.multadds = 2 * pixels;
    build.checksum = sat_sum;
    rows.push_back(build);

    std::vector<DenseKernel> dense;
    for (const BoxParams& b : layer.boxes()) dense.push_back(effective_kernel(b));
    BenchResult naive = base;
    naive.method = "naive_dense";
    naive.wall_ms = time_ms(o, [&] { out = naive_conv_depthwise(input, dense); });
    naive.multadds = pixels * dense.front().multadds_per_pixel();
    naive.checksum = sum(out);
    rows.push_back(naive);

    if ((k - 1) % 3 == 0) {
      std::vector<DenseKernel> dilated;
      for (std::size_t c = 0; c < o.channels; ++c) {
        DenseKernel d(4, (k - 1) / 3);
        for (double& w : d.weights) w = u(rng);
        dilated.push_back(std::move(d));
      }
      BenchResult dil = base;
      dil.method = "dilated";
      dil.wall_ms = time_ms(o, [&] { out = naive_conv_depthwise(input, dilated); });
      dil.multadds = pixels * dilated.front().multadds_per_pixel();
      dil.checksum = sum(out);
      rows.push_back(dil);
    }
  }
  return rows;
}

void write_csv(std::ostream& out, const std::vector<BenchResult>& rows, bool include_times) {
  out << kBenchCsvHeader << "\n";
  char buf[256];
  for (const BenchResult& r : rows) {
    std::string wall = "-";
    if (include_times) {
      std::snprintf(buf, sizeof buf, "%.6f", r.wall_ms);
      wall = buf;
    }
    std::snprintf(buf, sizeof buf, "%s,%d,%zu,%zu,%zu,%s,%llu,%.17g\n", r.method.c_str(), r.k, r.channels,
                  r.height, r.width, wall.c_str(), static_cast<unsigned long long>(r.multadds), r.checksum);
    out << buf;
  }
}

const BenchResult* find_row(const std::vector<BenchResult>& rows, const std::string& method, int k) {
  for (const BenchResult& r : rows) {
    if (r.method == method && r.k == k) return &r;
  }
  return nullptr;
}

}  // namespace satconv::tools
