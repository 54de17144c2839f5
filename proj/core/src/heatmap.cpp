#include "satconv/heatmap.hpp"

#include <cmath>
#include <string>

#include "satconv/errors.hpp"

namespace satconv {

FeatureMap gaussian_target(Keypoint peak, std::size_t height, std::size_t width, double sigma) {
  if (!(peak.x >= 0.0 && peak.y >= 0.0 && peak.x <= static_cast<double>(width - 1) &&
        peak.y <= static_cast<double>(height - 1))) {
    throw ContractViolation("gaussian_target: peak (" + std::to_string(peak.x) + ", " +
                            std::to_string(peak.y) + ") outside " + std::to_string(height) +
                            "x" + std::to_string(width));
  }
  if (!(sigma > 0.0)) throw ContractViolation("gaussian_target: sigma must be positive");
  FeatureMap out(1, height, width);
  const double denom = 2.0 * sigma * sigma;
  for (std::size_t i = 0; i < height; ++i) {
    const double dy = static_cast<double>(i) - peak.y;
    for (std::size_t j = 0; j < width; ++j) {
      const double dx = static_cast<double>(j) - peak.x;
      out(0, i, j) = std::exp(-(dx * dx + dy * dy) / denom);
    }
  }
  return out;
}

Keypoint decode_keypoint(std::span<const double> plane, std::size_t height, std::size_t width) {
  if (plane.size() != height * width || plane.size() < 2) {
    throw ContractViolation("decode_keypoint: need at least two pixels");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < plane.size(); ++i) {
    if (plane[i] > plane[best]) best = i;
  }
  std::size_t second = best == 0 ? 1 : 0;
  for (std::size_t i = 0; i < plane.size(); ++i) {
    if (i != best && plane[i] > plane[second]) second = i;
  }
  const auto bx = static_cast<double>(best % width), by = static_cast<double>(best / width);
  const auto sx = static_cast<double>(second % width), sy = static_cast<double>(second / width);
  return {bx + 0.25 * (sx - bx), by + 0.25 * (sy - by)};
}

Keypoint decode_keypoint(const FeatureMap& heatmap, std::size_t channel) {
  const Shape s = heatmap.shape();
  return decode_keypoint(heatmap.plane(channel), s.height, s.width);
}

LossResult mse_loss(const FeatureMap& pred, const FeatureMap& target) {
  if (pred.shape() != target.shape()) {
    throw DimensionError("mse_loss: " + to_string(pred.shape()) + " vs " +
                         to_string(target.shape()));
  }
  LossResult r{0.0, FeatureMap(pred.shape())};
  const auto p = pred.data();
  const auto t = target.data();
  auto g = r.grad.data();
  const double n = static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    r.loss += d * d;
    g[i] = 2.0 * d / n;
  }
  r.loss /= n;
  return r;
}

}  // namespace satconv
