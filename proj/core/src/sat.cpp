#include "satconv/sat.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace satconv {

SummedAreaTable::SummedAreaTable(std::size_t height, std::size_t width)
    : height_(height), width_(width), data_((height + 1) * (width + 1), 0.0) {
  if (height == 0 || width == 0) throw DimensionError("summed-area table needs H, W >= 1");
}

template <typename T>
SummedAreaTable build_sat(std::span<const T> plane, std::size_t height, std::size_t width) {
  if (plane.size() != height * width) {
    throw DimensionError("build_sat: plane has " + std::to_string(plane.size()) +
                         " values, expected " + std::to_string(height * width));
  }
  SummedAreaTable sat(height, width);
  const std::size_t stride = width + 1;
  double* d = sat.data_.data();
  for (std::size_t i = 0; i < height; ++i) {
    const T* src = plane.data() + i * width;
    double* dst = d + (i + 1) * stride;
    double run = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      run += static_cast<double>(src[j]);
      dst[j + 1] = run;
    }
  }
  for (std::size_t i = 2; i <= height; ++i) {
    const double* above = d + (i - 1) * stride;
    double* dst = d + i * stride;
    for (std::size_t j = 1; j <= width; ++j) dst[j] += above[j];
  }
  return sat;
}

template SummedAreaTable build_sat<double>(std::span<const double>, std::size_t, std::size_t);
template SummedAreaTable build_sat<float>(std::span<const float>, std::size_t, std::size_t);

double region_sum_integer(const SummedAreaTable& sat, long x_lo, long x_hi, long y_lo,
                          long y_hi) {
  if (x_hi < x_lo || y_hi < y_lo) return 0.0;
  const long W = static_cast<long>(sat.width());
  const long H = static_cast<long>(sat.height());
  const auto cx = [W](long v) { return static_cast<std::size_t>(std::clamp(v, 0L, W)); };
  const auto cy = [H](long v) { return static_cast<std::size_t>(std::clamp(v, 0L, H)); };
  const std::size_t x0 = cx(x_lo), x1 = cx(x_hi + 1);
  const std::size_t y0 = cy(y_lo), y1 = cy(y_hi + 1);
  // Row differences first, so an empty span cancels to exactly zero.
  return (sat.at(y1, x1) - sat.at(y1, x0)) - (sat.at(y0, x1) - sat.at(y0, x0));
}

SubpixelCoord clamp_coord(const SummedAreaTable& sat, SubpixelCoord c) {
  return {std::clamp(c.x, 0.0, static_cast<double>(sat.width())),
          std::clamp(c.y, 0.0, static_cast<double>(sat.height()))};
}

namespace {

struct Cell {
  std::size_t x0, x1, y0, y1;
  double alpha, beta;
};

Cell locate(const SummedAreaTable& sat, SubpixelCoord c) {
  const SubpixelCoord k = clamp_coord(sat, c);
  const double fx = std::floor(k.x);
  const double fy = std::floor(k.y);
  Cell cell;
  cell.x0 = static_cast<std::size_t>(fx);
  cell.y0 = static_cast<std::size_t>(fy);
  cell.x1 = std::min(cell.x0 + 1, sat.width());
  cell.y1 = std::min(cell.y0 + 1, sat.height());
  cell.alpha = k.x - fx;
  cell.beta = k.y - fy;
  return cell;
}

}  // namespace

double sample_bilinear(const SummedAreaTable& sat, SubpixelCoord c) {
  const Cell s = locate(sat, c);
  const double a = s.alpha, b = s.beta;
  return (1 - a) * (1 - b) * sat.at(s.y0, s.x0) + a * (1 - b) * sat.at(s.y0, s.x1) +
         (1 - a) * b * sat.at(s.y1, s.x0) + a * b * sat.at(s.y1, s.x1);
}

BilinearGrad sample_bilinear_grad(const SummedAreaTable& sat, SubpixelCoord c) {
  const Cell s = locate(sat, c);
  const double a = s.alpha, b = s.beta;
  const double s00 = sat.at(s.y0, s.x0), s10 = sat.at(s.y0, s.x1);
  const double s01 = sat.at(s.y1, s.x0), s11 = sat.at(s.y1, s.x1);
  BilinearGrad g;
  g.corner_weights = {(1 - a) * (1 - b), a * (1 - b), (1 - a) * b, a * b};
  const bool x_clamped = c.x < 0.0 || c.x > static_cast<double>(sat.width());
  const bool y_clamped = c.y < 0.0 || c.y > static_cast<double>(sat.height());
  if (!x_clamped) g.d_dx = -(1 - b) * s00 + (1 - b) * s10 - b * s01 + b * s11;
  if (!y_clamped) g.d_dy = -(1 - a) * s00 - a * s10 + (1 - a) * s01 + a * s11;
  return g;
}

std::vector<double> sat_backward(std::span<const double> grad_sat, std::size_t height,
                                 std::size_t width) {
  const std::size_t stride = width + 1;
  if (grad_sat.size() != (height + 1) * stride) {
    throw DimensionError("sat_backward: gradient has " + std::to_string(grad_sat.size()) +
                         " entries, expected " +
                         std::to_string((height + 1) * stride));
  }
  // Suffix sums: first along each row (right to left), then up the columns.
  std::vector<double> suffix((height + 1) * stride, 0.0);
  for (std::size_t i = 1; i <= height; ++i) {
    double run = 0.0;
    for (std::size_t j = width; j >= 1; --j) {
      run += grad_sat[i * stride + j];
      suffix[i * stride + j] = run;
    }
  }
  for (std::size_t i = height; i-- > 1;) {
    for (std::size_t j = 1; j <= width; ++j) suffix[i * stride + j] += suffix[(i + 1) * stride + j];
  }
  std::vector<double> grad_source(height * width);
  for (std::size_t p = 0; p < height; ++p) {
    for (std::size_t q = 0; q < width; ++q) {
      grad_source[p * width + q] = suffix[(p + 1) * stride + q + 1];
    }
  }
  return grad_source;
}

}  // namespace satconv
