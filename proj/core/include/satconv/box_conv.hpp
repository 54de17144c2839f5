#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "satconv/box_kernel.hpp"
#include "satconv/feature_map.hpp"
#include "satconv/sat.hpp"

namespace satconv {

struct ExecOptions {
  // Worker count for per-channel parallelism. Each channel is owned by one
  // worker, so results do not depend on this value.
  unsigned threads = 1;
};

/// Depth-wise box convolution: channel c of the input is filtered by box c.
/// Plans are recompiled whenever the boxes change.
class BoxConvLayer {
 public:
  explicit BoxConvLayer(std::vector<BoxParams> boxes, int stride = 1,
                        bool round_corners = false);

  static BoxConvLayer random(std::size_t channels, int k, BoxVariant variant,
                             BoxRng& rng, int stride = 1);

  std::size_t channels() const { return boxes_.size(); }
  int kernel_size() const { return boxes_.front().max_kernel; }
  int stride() const { return stride_; }
  bool round_corners() const { return round_corners_; }

  const std::vector<BoxParams>& boxes() const { return boxes_; }
  const std::vector<CornerSamplePlan>& plans() const { return plans_; }

  // Boxes must be feasible and share the layer's kernel size.
  void set_boxes(std::vector<BoxParams> boxes);
  // Snap corners to the lattice and freeze the box parameters.
  void set_round_corners(bool on);

 private:
  void rebuild();

  std::vector<BoxParams> boxes_;
  int stride_;
  bool round_corners_;
  std::vector<CornerSamplePlan> plans_;
};

// Output extent under the ceiling convention.
constexpr std::size_t output_extent(std::size_t n, int stride) {
  return (n + static_cast<std::size_t>(stride) - 1) / static_cast<std::size_t>(stride);
}

struct ForwardState {
  Shape input_shape;
  std::size_t out_height = 0;
  std::size_t out_width = 0;
  int stride = 1;
  std::vector<SummedAreaTable> sats;
  std::vector<CornerSamplePlan> plans;
};

struct ForwardResult {
  FeatureMap output;
  ForwardState saved;
};

ForwardResult forward(const BoxConvLayer& layer, const FeatureMap& input,
                      const ExecOptions& exec = {});

// Forward pass without retaining state; available in both precisions.
template <typename T>
BasicFeatureMap<T> apply_box_conv(const BoxConvLayer& layer, const BasicFeatureMap<T>& input,
                                  const ExecOptions& exec = {});

struct BoxGradients {
  std::array<double, 4> theta{};  // xl, xh, yl, yh
  double split_x = 0.0;
  double split_y = 0.0;
  std::array<double, 4> weights{};
};

struct LayerGradients {
  FeatureMap grad_input;
  std::vector<BoxGradients> grad_boxes;
};

/// Input gradients are scattered into a per-channel SAT-shaped buffer and
/// pulled back through sat_backward. Coordinate gradients are zero where a
/// sample is clamped to the image border, and all box gradients are zero
/// when the layer rounds its corners.
LayerGradients backward(const BoxConvLayer& layer, const ForwardState& saved,
                        const FeatureMap& grad_output, const ExecOptions& exec = {});

// Forward multadds, excluding SAT construction.
std::uint64_t multadd_count(const BoxConvLayer& layer, const Shape& input_shape);

}  // namespace satconv
