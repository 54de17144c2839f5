#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "satconv/feature_map.hpp"

namespace satconv {

/// Summed-area table of one H x W plane, stored as (H+1) x (W+1) with an
/// all-zero first row and first column:
///
///   at(i, j) == sum of source[p][q] for p < i, q < j.
///
/// Entries are always accumulated in double, whatever the source precision.
/// Immutable once built.
class SummedAreaTable {
 public:
  SummedAreaTable(std::size_t height, std::size_t width);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t row_stride() const { return width_ + 1; }

  double at(std::size_t i, std::size_t j) const { return data_[i * (width_ + 1) + j]; }
  const double* row(std::size_t i) const { return data_.data() + i * (width_ + 1); }
  std::span<const double> data() const { return data_; }

  template <typename T>
  friend SummedAreaTable build_sat(std::span<const T> plane, std::size_t height,
                                   std::size_t width);

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<double> data_;
};

// Row running sums, then column accumulation.
template <typename T>
SummedAreaTable build_sat(std::span<const T> plane, std::size_t height, std::size_t width);

template <typename T>
SummedAreaTable build_sat(const BasicFeatureMap<T>& fm, std::size_t channel) {
  return build_sat<T>(fm.plane(channel), fm.height(), fm.width());
}

/// Sum over the closed pixel rectangle [x_lo, x_hi] x [y_lo, y_hi] intersected
/// with the image. x is the column (width) axis, y the row (height) axis.
double region_sum_integer(const SummedAreaTable& sat, long x_lo, long x_hi, long y_lo,
                          long y_hi);

/// Continuous SAT coordinate; x in [0, W], y in [0, H] once clamped.
struct SubpixelCoord {
  double x = 0.0;
  double y = 0.0;
};

SubpixelCoord clamp_coord(const SummedAreaTable& sat, SubpixelCoord c);

// Bilinear interpolation of SAT entries. Coordinates are clamped first, which
// is the same as zero-padding the source.
double sample_bilinear(const SummedAreaTable& sat, SubpixelCoord c);

struct BilinearGrad {
  double d_dx = 0.0;
  double d_dy = 0.0;
  // Coefficients of S[floor x, floor y], S[ceil x, floor y], S[floor x, ceil y],
  // S[ceil x, ceil y] in that order.
  std::array<double, 4> corner_weights{};
};

// Uses the cell whose lower corner is (floor x, floor y), so derivatives at
// lattice points are right-sided. Zero along any axis where clamping is active.
BilinearGrad sample_bilinear_grad(const SummedAreaTable& sat, SubpixelCoord c);

/// Adjoint of build_sat: grad_source[p][q] = sum of grad_sat[i][j] over i > p,
/// j > q. `grad_sat` has (H+1) x (W+1) entries; returns H x W.
std::vector<double> sat_backward(std::span<const double> grad_sat, std::size_t height,
                                 std::size_t width);

}  // namespace satconv
