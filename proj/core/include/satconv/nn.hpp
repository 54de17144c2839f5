#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "satconv/box_conv.hpp"
#include "satconv/box_kernel.hpp"
#include "satconv/feature_map.hpp"
#include "satconv/tensor_ops.hpp"

namespace satconv {

struct ParamGroup {
  std::string name;
  std::span<double> values;
  std::span<double> grads;
  double lr_scale = 1.0;
};

/// A layer caches what its last forward call needs, so forward and backward
/// alternate per sample. backward accumulates parameter gradients until
/// zero_grad.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual FeatureMap forward(const FeatureMap& x) = 0;
  virtual FeatureMap backward(const FeatureMap& grad_output) = 0;
  virtual void collect(std::vector<ParamGroup>& /*out*/) {}
  virtual void zero_grad() {}
  // Called after every optimizer step.
  virtual void after_step() {}
};

class Sequential final : public Layer {
 public:
  Sequential() = default;
  explicit Sequential(std::vector<std::unique_ptr<Layer>> layers) : layers_(std::move(layers)) {}

  void push(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
  std::size_t size() const { return layers_.size(); }
  Layer& at(std::size_t i) { return *layers_[i]; }

  FeatureMap forward(const FeatureMap& x) override;
  FeatureMap backward(const FeatureMap& grad_output) override;
  void collect(std::vector<ParamGroup>& out) override;
  void zero_grad() override;
  void after_step() override;

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

class PointwiseLayer final : public Layer {
 public:
  PointwiseLayer(std::size_t in, std::size_t out, BoxRng& rng, bool bias = true);
  explicit PointwiseLayer(PointwiseWeights w, bool bias = true);

  const PointwiseWeights& weights() const { return w_; }
  PointwiseWeights& weights() { return w_; }

  FeatureMap forward(const FeatureMap& x) override;
  FeatureMap backward(const FeatureMap& grad_output) override;
  void collect(std::vector<ParamGroup>& out) override;
  void zero_grad() override;

 private:
  PointwiseWeights w_;
  bool has_bias_;
  std::vector<double> grad_matrix_, grad_bias_;
  FeatureMap input_;
};

class ReluLayer final : public Layer {
 public:
  FeatureMap forward(const FeatureMap& x) override;
  FeatureMap backward(const FeatureMap& grad_output) override;

 private:
  FeatureMap input_;
};

// Dense 3x3 depth-wise convolution, zero padding, stride 1, no bias.
class DepthwiseConv3x3Layer final : public Layer {
 public:
  DepthwiseConv3x3Layer(std::size_t channels, BoxRng& rng);

  std::span<double> weights() { return weights_; }

  FeatureMap forward(const FeatureMap& x) override;
  FeatureMap backward(const FeatureMap& grad_output) override;
  void collect(std::vector<ParamGroup>& out) override;
  void zero_grad() override;

 private:
  std::size_t channels_;
  std::vector<double> weights_, grads_;  // channel-major, 9 per channel
  FeatureMap input_;
};

/// Learnable depth-wise box convolution. Parameters are stored flat, ten per
/// box: xl xh yl yh split_x split_y w0 w1 w2 w3. The flat buffer is
/// authoritative: forward picks up edits (which must stay feasible) and
/// after_step projects every box.
class BoxConvModule final : public Layer {
 public:
  static constexpr std::size_t kParamsPerBox = 10;

  BoxConvModule(std::size_t channels, int k, BoxVariant variant, BoxRng& rng,
                ExecOptions exec = {});
  BoxConvModule(std::vector<BoxParams> boxes, ExecOptions exec = {});

  const BoxConvLayer& layer() const { return layer_; }

  FeatureMap forward(const FeatureMap& x) override;
  FeatureMap backward(const FeatureMap& grad_output) override;
  void collect(std::vector<ParamGroup>& out) override;
  void zero_grad() override;
  void after_step() override;

 private:
  void sync_flat();
  void load_flat();

  BoxConvLayer layer_;
  ExecOptions exec_;
  std::vector<double> flat_, grads_;
  ForwardState saved_;
};

/// Split the channels in half, transform the second half, concatenate and
/// shuffle with two groups. With an empty inner transform the block is a pure
/// channel permutation.
class HalfProcessBlock final : public Layer {
 public:
  HalfProcessBlock(std::size_t channels, std::unique_ptr<Layer> inner);

  FeatureMap forward(const FeatureMap& x) override;
  FeatureMap backward(const FeatureMap& grad_output) override;
  void collect(std::vector<ParamGroup>& out) override;
  void zero_grad() override;
  void after_step() override;

 private:
  std::size_t channels_;
  std::unique_ptr<Layer> inner_;
};

/// Two branches on the full input, each producing out/2 channels, then
/// concatenate and shuffle.
class ChannelChangeBlock final : public Layer {
 public:
  ChannelChangeBlock(std::size_t in, std::size_t out, std::unique_ptr<Layer> left,
                     std::unique_ptr<Layer> right);

  FeatureMap forward(const FeatureMap& x) override;
  FeatureMap backward(const FeatureMap& grad_output) override;
  void collect(std::vector<ParamGroup>& out) override;
  void zero_grad() override;
  void after_step() override;

 private:
  std::size_t in_, out_;
  std::unique_ptr<Layer> left_, right_;
};

// Block list entries:
//   half-conv3            half-process block with a 3x3 depth-wise conv
//   half-box<k>           half-process block with a box conv of window k
//   change-conv3:<C>      channel change to C channels
//   change-box<k>:<C>
struct BlockSpec {
  enum class Kind { Half, Change };
  Kind kind = Kind::Half;
  int box_k = 0;  // 0 means 3x3 dense depth-wise
  std::size_t out_channels = 0;

  friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

BlockSpec parse_block(std::string_view text);
std::string to_string(const BlockSpec& b);

struct NetworkSpec {
  std::size_t in_channels = 1;
  std::size_t width = 8;  // channels after the stem
  std::size_t out_channels = 1;
  std::vector<BlockSpec> blocks;
  BoxVariant box_variant = BoxVariant::Single;
};

/// Stem pointwise + ReLU, the block list, then a pointwise head. The head
/// starts at zero so an untrained network predicts a constant map. Spatial
/// size never changes.
class ToyNetwork final : public Layer {
 public:
  ToyNetwork(const NetworkSpec& spec, BoxRng& rng, ExecOptions exec = {});

  FeatureMap forward(const FeatureMap& x) override;
  FeatureMap backward(const FeatureMap& grad_output) override;
  void collect(std::vector<ParamGroup>& out) override;
  void zero_grad() override;
  void after_step() override;

  // Box layers in network order.
  std::vector<const BoxConvModule*> box_modules() const { return boxes_; }
  std::vector<ParamGroup> parameters();

 private:
  Sequential body_;
  std::vector<const BoxConvModule*> boxes_;
};

}  // namespace satconv
