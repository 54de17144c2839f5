#include "satconv/tensor_ops.hpp"

#include <algorithm>
#include <string>

namespace satconv {

PointwiseWeights::PointwiseWeights(std::size_t out, std::size_t in)
    : out_channels(out), in_channels(in), matrix(out * in, 0.0), bias(out, 0.0) {}

PointwiseWeights::PointwiseWeights(std::size_t out, std::size_t in,
                                   std::vector<double> m, std::vector<double> b)
    : out_channels(out), in_channels(in), matrix(std::move(m)), bias(std::move(b)) {
  validate();
}

PointwiseWeights PointwiseWeights::identity(std::size_t channels) {
  PointwiseWeights w(channels, channels);
  for (std::size_t c = 0; c < channels; ++c) w.at(c, c) = 1.0;
  return w;
}

void PointwiseWeights::validate() const {
  if (matrix.size() != out_channels * in_channels || bias.size() != out_channels) {
    throw DimensionError("pointwise weights: matrix " + std::to_string(matrix.size()) +
                         " / bias " + std::to_string(bias.size()) +
                         " do not match " + std::to_string(out_channels) + "x" +
                         std::to_string(in_channels));
  }
}

FeatureMap pointwise_conv(const FeatureMap& input, const PointwiseWeights& w) {
  w.validate();
  if (input.channels() != w.in_channels) {
    throw DimensionError("pointwise_conv: input has " +
                         std::to_string(input.channels()) + " channels, weights expect " +
                         std::to_string(w.in_channels));
  }
  FeatureMap out(w.out_channels, input.height(), input.width());
  const std::size_t n = input.shape().plane_size();
  for (std::size_t o = 0; o < w.out_channels; ++o) {
    auto dst = out.plane(o);
    std::fill(dst.begin(), dst.end(), w.bias[o]);
    for (std::size_t c = 0; c < w.in_channels; ++c) {
      const double m = w.at(o, c);
      auto src = input.plane(c);
      for (std::size_t i = 0; i < n; ++i) dst[i] += m * src[i];
    }
  }
  return out;
}

PointwiseGrads pointwise_conv_backward(const FeatureMap& input,
                                       const PointwiseWeights& w,
                                       const FeatureMap& grad_output) {
  if (input.channels() != w.in_channels || grad_output.channels() != w.out_channels ||
      input.height() != grad_output.height() || input.width() != grad_output.width()) {
    throw DimensionError("pointwise_conv_backward: shape mismatch");
  }
  const std::size_t n = input.shape().plane_size();
  PointwiseGrads g{FeatureMap(input.shape()),
                   std::vector<double>(w.matrix.size(), 0.0),
                   std::vector<double>(w.out_channels, 0.0)};
  for (std::size_t o = 0; o < w.out_channels; ++o) {
    auto go = grad_output.plane(o);
    double bsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) bsum += go[i];
    g.grad_bias[o] = bsum;
    for (std::size_t c = 0; c < w.in_channels; ++c) {
      auto x = input.plane(c);
      auto gi = g.grad_input.plane(c);
      const double m = w.at(o, c);
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += go[i] * x[i];
        gi[i] += m * go[i];
      }
      g.grad_matrix[o * w.in_channels + c] = acc;
    }
  }
  return g;
}

namespace {

FeatureMap permute_channels(const FeatureMap& input, std::size_t groups, bool inverse) {
  const std::size_t C = input.channels();
  if (groups == 0 || C % groups != 0) {
    throw DimensionError("channel_shuffle: " + std::to_string(C) +
                         " channels not divisible by " + std::to_string(groups) +
                         " groups");
  }
  const std::size_t per = C / groups;
  FeatureMap out(input.shape());
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t i = 0; i < per; ++i) {
      const std::size_t grouped = g * per + i;
      const std::size_t interleaved = i * groups + g;
      auto src = input.plane(inverse ? interleaved : grouped);
      auto dst = out.plane(inverse ? grouped : interleaved);
      std::copy(src.begin(), src.end(), dst.begin());
    }
  }
  return out;
}

}  // namespace

FeatureMap channel_shuffle(const FeatureMap& input, std::size_t groups) {
  return permute_channels(input, groups, false);
}

FeatureMap channel_unshuffle(const FeatureMap& input, std::size_t groups) {
  return permute_channels(input, groups, true);
}

std::pair<FeatureMap, FeatureMap> channel_split(const FeatureMap& input, std::size_t at) {
  const std::size_t C = input.channels();
  if (at == 0 || at >= C) {
    throw DimensionError("channel_split: split point " + std::to_string(at) +
                         " outside (0, " + std::to_string(C) + ")");
  }
  const std::size_t n = input.shape().plane_size();
  auto data = input.data();
  std::vector<double> lo(data.begin(), data.begin() + at * n);
  std::vector<double> hi(data.begin() + at * n, data.end());
  return {FeatureMap({at, input.height(), input.width()}, std::move(lo)),
          FeatureMap({C - at, input.height(), input.width()}, std::move(hi))};
}

FeatureMap channel_concat(const FeatureMap& a, const FeatureMap& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw DimensionError("channel_concat: spatial shapes " + to_string(a.shape()) +
                         " and " + to_string(b.shape()) + " differ");
  }
  std::vector<double> data;
  data.reserve(a.size() + b.size());
  data.insert(data.end(), a.data().begin(), a.data().end());
  data.insert(data.end(), b.data().begin(), b.data().end());
  return FeatureMap({a.channels() + b.channels(), a.height(), a.width()},
                    std::move(data));
}

FeatureMap relu(const FeatureMap& x) {
  FeatureMap out(x.shape());
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0 ? src[i] : 0.0;
  return out;
}

FeatureMap relu_backward(const FeatureMap& input, const FeatureMap& grad) {
  if (input.shape() != grad.shape()) throw DimensionError("relu_backward: shape mismatch");
  FeatureMap out(input.shape());
  auto x = input.data();
  auto g = grad.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = x[i] > 0.0 ? g[i] : 0.0;
  return out;
}

FeatureMap axpby(double alpha, const FeatureMap& x, double beta, const FeatureMap& y) {
  if (x.shape() != y.shape()) throw DimensionError("axpby: shape mismatch");
  FeatureMap out(x.shape());
  auto a = x.data();
  auto b = y.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) dst[i] = alpha * a[i] + beta * b[i];
  return out;
}

FeatureMap add(const FeatureMap& a, const FeatureMap& b) { return axpby(1.0, a, 1.0, b); }

double dot(const FeatureMap& a, const FeatureMap& b) {
  if (a.shape() != b.shape()) throw DimensionError("dot: shape mismatch");
  double acc = 0.0;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

}  // namespace satconv
