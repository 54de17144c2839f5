#pragma once

// Slow, direct implementations used as correctness oracles and benchmark
// baselines. Kept unoptimized on purpose.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "satconv/box_kernel.hpp"
#include "satconv/feature_map.hpp"

namespace satconv {

/// size x size weights (row-major, row = y), optionally dilated. The window is
/// centered: tap (i, j) reads offset (i*d - anchor, j*d - anchor).
struct DenseKernel {
  int size = 1;
  int dilation = 1;
  std::vector<double> weights;

  DenseKernel() : weights(1, 0.0) {}
  explicit DenseKernel(int size, int dilation = 1);

  double& at(int row, int col) { return weights[static_cast<std::size_t>(row * size + col)]; }
  double at(int row, int col) const { return weights[static_cast<std::size_t>(row * size + col)]; }

  int receptive_field() const { return (size - 1) * dilation + 1; }
  int anchor() const { return ((size - 1) * dilation) / 2; }
  std::size_t multadds_per_pixel() const { return static_cast<std::size_t>(size * size); }
};

// Direct correlation with zero padding; output is ceil(H/stride) x ceil(W/stride).
template <typename T>
std::vector<T> naive_conv(std::span<const T> plane, std::size_t height, std::size_t width,
                          const DenseKernel& kernel, int stride = 1);

// One kernel per channel.
FeatureMap naive_conv_depthwise(const FeatureMap& input, const std::vector<DenseKernel>& kernels,
                                int stride = 1);

/// Dense k x k kernel equivalent to the interpolated box: every pixel's weight
/// is the overlap of its unit cell with the continuous box, per axis, summed
/// over sub-boxes with their weights.
DenseKernel effective_kernel(const BoxParams& box, bool round_corners = false);

double finite_diff(const std::function<double(double)>& f, double at, double h = 1e-5);

// |a - b| / max(|a|, |b|, 1e-8)
double relative_error(double a, double b);

}  // namespace satconv
