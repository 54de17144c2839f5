#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace satconv {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moments for one flat parameter buffer.
struct AdamState {
  AdamOptions options;
  std::size_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  AdamState() = default;
  explicit AdamState(std::size_t size, AdamOptions opts = {});
};

// Bias-corrected Adam update in place. Throws DimensionError when the buffers
// disagree in size.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

}  // namespace satconv
