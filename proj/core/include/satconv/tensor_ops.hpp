#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "satconv/feature_map.hpp"

namespace satconv {

/// 1x1 convolution weights: `matrix` is out_channels x in_channels row-major.
struct PointwiseWeights {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::vector<double> matrix;
  std::vector<double> bias;

  PointwiseWeights() = default;
  PointwiseWeights(std::size_t out, std::size_t in);
  PointwiseWeights(std::size_t out, std::size_t in, std::vector<double> matrix,
                   std::vector<double> bias);

  static PointwiseWeights identity(std::size_t channels);

  double& at(std::size_t o, std::size_t c) { return matrix[o * in_channels + c]; }
  double at(std::size_t o, std::size_t c) const { return matrix[o * in_channels + c]; }

  void validate() const;
};

FeatureMap pointwise_conv(const FeatureMap& input, const PointwiseWeights& w);

struct PointwiseGrads {
  FeatureMap grad_input;
  std::vector<double> grad_matrix;
  std::vector<double> grad_bias;
};

PointwiseGrads pointwise_conv_backward(const FeatureMap& input,
                                       const PointwiseWeights& w,
                                       const FeatureMap& grad_output);

// Channel c = g * (C/groups) + i moves to position i * groups + g.
FeatureMap channel_shuffle(const FeatureMap& input, std::size_t groups);
// Inverse permutation of channel_shuffle with the same group count.
FeatureMap channel_unshuffle(const FeatureMap& input, std::size_t groups);

std::pair<FeatureMap, FeatureMap> channel_split(const FeatureMap& input,
                                                std::size_t at);
FeatureMap channel_concat(const FeatureMap& a, const FeatureMap& b);

FeatureMap relu(const FeatureMap& x);
// Masks grad by (input > 0).
FeatureMap relu_backward(const FeatureMap& input, const FeatureMap& grad);

FeatureMap add(const FeatureMap& a, const FeatureMap& b);
FeatureMap axpby(double alpha, const FeatureMap& x, double beta,
                 const FeatureMap& y);
double dot(const FeatureMap& a, const FeatureMap& b);

}  // namespace satconv
