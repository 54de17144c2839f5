#pragma once

#include <cstddef>
#include <span>
#include <utility>

#include "satconv/feature_map.hpp"

namespace satconv {

struct Keypoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

/// Unnormalized Gaussian with peak value 1 at (x, y); x indexes columns.
/// Throws ContractViolation when the peak lies outside [0, W-1] x [0, H-1].
FeatureMap gaussian_target(Keypoint peak, std::size_t height, std::size_t width,
                           double sigma = 2.0);

/// Argmax shifted a quarter of the way toward the second-highest pixel. Ties
/// go to the first pixel in row-major order.
Keypoint decode_keypoint(std::span<const double> plane, std::size_t height, std::size_t width);
Keypoint decode_keypoint(const FeatureMap& heatmap, std::size_t channel = 0);

struct LossResult {
  double loss = 0.0;
  FeatureMap grad;
};

// Mean squared error and its gradient 2 (pred - target) / N.
LossResult mse_loss(const FeatureMap& pred, const FeatureMap& target);

}  // namespace satconv
