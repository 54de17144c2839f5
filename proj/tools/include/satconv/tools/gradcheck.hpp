#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "satconv/box_kernel.hpp"

namespace satconv::tools {

inline constexpr double kGradTolerance = 1e-5;
inline constexpr double kFiniteDiffStep = 1e-5;

// Bound on |analytic| for input pixels outside every output's support, where
// the true gradient is zero and central differences only see roundoff.
inline constexpr double kZeroGradTolerance = 1e-12;

// "input_outside" is judged by the absolute analytic value, the rest by
// relative error against central differences.
inline constexpr std::array<std::string_view, 9> kGradCategories = {
    "theta_xl", "theta_xh", "theta_yl", "theta_yh", "split_x",
    "split_y",  "weights",  "input",    "input_outside"};

struct GradcheckCase {
  BoxVariant variant = BoxVariant::Single;
  int k = 5;
  std::size_t height = 8;
  std::size_t width = 8;
  int stride = 1;
};

std::string describe(const GradcheckCase& c);

struct GradCheck {
  std::string_view category;
  std::size_t index = 0;  // sub-box weight or flat input pixel; 0 otherwise
  double analytic = 0.0;
  double numeric = 0.0;
  double error = 0.0;  // relative error, or |analytic| for input_outside
  bool passed = true;
};

struct CaseResult {
  GradcheckCase config;
  BoxParams box;
  std::vector<GradCheck> checks;
};

/// A feasible box whose sample coordinates keep `margin` pixels away from
/// lattice lines and whose thetas keep clear of their bounds and of each
/// other, so central differences never cross a kink.
BoxParams random_smooth_box(int k, BoxVariant variant, BoxRng& rng, double margin = 1e-3);

/// Checks every learnable box parameter and `input_samples` random input
/// pixels of <box_conv(x), r> against central differences. Input pixels are
/// drawn from the support of the dense-kernel oracle; up to `input_samples`
/// pixels outside it must have a zero analytic gradient. A non-empty `fault`
/// scales that category's analytic gradient by 1.01.
CaseResult check_case(const GradcheckCase& config, BoxRng& rng, std::size_t input_samples = 8,
                      std::string_view fault = {});

struct GradcheckOptions {
  std::uint64_t seed = 1;
  std::vector<std::size_t> sizes{8, 12, 16};
  std::vector<int> kernels{5, 9, 13};
  std::vector<int> strides{1, 2};
  std::size_t repeats = 2;  // random boxes per (variant, k, size, stride)
  std::string fault;
};

struct CategoryStats {
  double max_error = 0.0;
  std::size_t checks = 0;
};

struct GradcheckReport {
  std::size_t cases = 0;
  std::array<CategoryStats, kGradCategories.size()> stats{};
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

void accumulate(GradcheckReport& report, const CaseResult& result);
GradcheckReport run_gradcheck(const GradcheckOptions& options);
void print_report(std::ostream& out, const GradcheckOptions& options, const GradcheckReport& report);

}  // namespace satconv::tools
