#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace satconv::tools {

inline constexpr const char* kBenchCsvHeader = "method,k,channels,height,width,wall_ms,multadds,checksum";

struct BenchOptions {
  std::vector<int> kernels{7, 13, 21};
  std::size_t height = 256;
  std::size_t width = 256;
  std::size_t channels = 1;
  std::size_t repeats = 5;
  std::size_t warmup = 2;
  unsigned threads = 1;
  std::uint64_t seed = 1;
};

/// method is one of:
///   box_sat        SAT box convolution, SAT construction included
///   box_sat_build  SAT construction alone, reported beside box_sat
///   naive_dense    naive_conv with the box's effective k x k kernel
///   dilated        4x4 kernel at dilation (k-1)/3, only when that is integral
struct BenchResult {
  std::string method;
  int k = 0;
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  double wall_ms = 0.0;  // median over repeats
  std::uint64_t multadds = 0;
  double checksum = 0.0;  // sum of the output
};

// Median of at least one sample.
double median(std::vector<double> samples);

std::vector<BenchResult> run_bench(const BenchOptions& options);

// Fixed formatting; with wall_ms omitted ("-") the output is deterministic.
void write_csv(std::ostream& out, const std::vector<BenchResult>& rows, bool include_times = true);

const BenchResult* find_row(const std::vector<BenchResult>& rows, const std::string& method, int k);

}  // namespace satconv::tools
