#include "satconv/reference.hpp"

#include <algorithm>
#include <cmath>

#include "satconv/errors.hpp"

namespace satconv {

DenseKernel::DenseKernel(int s, int d) : size(s), dilation(d) {
  if (s < 1 || d < 1) throw ContractViolation("dense kernel needs size, dilation >= 1");
  weights.assign(static_cast<std::size_t>(s * s), 0.0);
}

template <typename T>
std::vector<T> naive_conv(std::span<const T> plane, std::size_t height, std::size_t width,
                          const DenseKernel& kernel, int stride) {
  if (plane.size() != height * width) throw DimensionError("naive_conv: plane size mismatch");
  if (stride < 1) throw ContractViolation("naive_conv: stride must be >= 1");
  const std::size_t oh = (height + stride - 1) / stride;
  const std::size_t ow = (width + stride - 1) / stride;
  const long H = static_cast<long>(height), W = static_cast<long>(width);
  const long a = kernel.anchor();
  std::vector<T> out(oh * ow);
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      double acc = 0.0;
      for (int i = 0; i < kernel.size; ++i) {
        const long y = static_cast<long>(oy) * stride + i * kernel.dilation - a;
        if (y < 0 || y >= H) continue;
        for (int j = 0; j < kernel.size; ++j) {
          const long x = static_cast<long>(ox) * stride + j * kernel.dilation - a;
          if (x < 0 || x >= W) continue;
          acc += kernel.at(i, j) * static_cast<double>(plane[y * W + x]);
        }
      }
      out[oy * ow + ox] = static_cast<T>(acc);
    }
  }
  return out;
}

template std::vector<double> naive_conv(std::span<const double>, std::size_t, std::size_t,
                                        const DenseKernel&, int);
template std::vector<float> naive_conv(std::span<const float>, std::size_t, std::size_t,
                                       const DenseKernel&, int);

FeatureMap naive_conv_depthwise(const FeatureMap& input, const std::vector<DenseKernel>& kernels,
                                int stride) {
  if (kernels.size() != input.channels()) {
    throw DimensionError("naive_conv_depthwise: one kernel per channel required");
  }
  const std::size_t oh = (input.height() + stride - 1) / stride;
  const std::size_t ow = (input.width() + stride - 1) / stride;
  FeatureMap out(input.channels(), oh, ow);
  for (std::size_t c = 0; c < input.channels(); ++c) {
    auto plane = naive_conv<double>(input.plane(c), input.height(), input.width(), kernels[c], stride);
    std::copy(plane.begin(), plane.end(), out.plane(c).begin());
  }
  return out;
}

namespace {

double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace

DenseKernel effective_kernel(const BoxParams& box, bool round_corners) {
  if (!is_feasible(box)) throw ContractViolation("effective_kernel: infeasible box");
  const int k = box.max_kernel;
  const int half = (k - 1) / 2;
  const double scale = (k - 1) / 2.0;

  // Edges of the covered interval along each axis, in the coordinate where
  // pixel offset p occupies [p, p + 1].
  auto edges = [&](double lo_t, double split_t, double hi_t, bool split) {
    double lo = lo_t * scale, hi = hi_t * scale + 1.0, mid = split_t * scale + 0.5;
    if (round_corners) {
      lo = std::round(lo_t * scale);
      hi = std::round(hi_t * scale) + 1.0;
      mid = std::round(mid);
    }
    std::vector<double> e{lo};
    if (split) e.push_back(mid);
    e.push_back(hi);
    return e;
  };
  const auto ex = edges(box.theta_xl, box.split_x, box.theta_xh, splits_x(box.variant));
  const auto ey = edges(box.theta_yl, box.split_y, box.theta_yh, splits_y(box.variant));

  DenseKernel kern(k);
  std::size_t b = 0;
  for (std::size_t j = 0; j + 1 < ey.size(); ++j) {
    for (std::size_t i = 0; i + 1 < ex.size(); ++i, ++b) {
      const double w = box.variant == BoxVariant::Single ? 1.0 : box.weights[b];
      for (int py = -half; py <= half; ++py) {
        const double oy = overlap(py, py + 1.0, ey[j], ey[j + 1]);
        if (oy == 0.0) continue;
        for (int px = -half; px <= half; ++px) {
          const double ox = overlap(px, px + 1.0, ex[i], ex[i + 1]);
          kern.at(py + half, px + half) += w * ox * oy;
        }
      }
    }
  }
  return kern;
}

double finite_diff(const std::function<double(double)>& f, double at, double h) {
  return (f(at + h) - f(at - h)) / (2.0 * h);
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

}  // namespace satconv
