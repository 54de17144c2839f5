#include "satconv/nn.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <string>

#include "satconv/errors.hpp"

namespace satconv {

FeatureMap Sequential::forward(const FeatureMap& x) {
  FeatureMap y = x;
  for (auto& l : layers_) y = l->forward(y);
  return y;
}

FeatureMap Sequential::backward(const FeatureMap& grad_output) {
  FeatureMap g = grad_output;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

void Sequential::collect(std::vector<ParamGroup>& out) {
  for (auto& l : layers_) l->collect(out);
}
void Sequential::zero_grad() {
  for (auto& l : layers_) l->zero_grad();
}
void Sequential::after_step() {
  for (auto& l : layers_) l->after_step();
}

// ---- pointwise ----

PointwiseLayer::PointwiseLayer(std::size_t in, std::size_t out, BoxRng& rng, bool bias)
    : w_(out, in), has_bias_(bias) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(in)));
  for (double& v : w_.matrix) v = dist(rng);
  grad_matrix_.assign(w_.matrix.size(), 0.0);
  grad_bias_.assign(w_.bias.size(), 0.0);
}

PointwiseLayer::PointwiseLayer(PointwiseWeights w, bool bias) : w_(std::move(w)), has_bias_(bias) {
  w_.validate();
  grad_matrix_.assign(w_.matrix.size(), 0.0);
  grad_bias_.assign(w_.bias.size(), 0.0);
}

FeatureMap PointwiseLayer::forward(const FeatureMap& x) {
  input_ = x;
  return pointwise_conv(x, w_);
}

FeatureMap PointwiseLayer::backward(const FeatureMap& grad_output) {
  PointwiseGrads g = pointwise_conv_backward(input_, w_, grad_output);
  for (std::size_t i = 0; i < g.grad_matrix.size(); ++i) grad_matrix_[i] += g.grad_matrix[i];
  if (has_bias_) {
    for (std::size_t i = 0; i < g.grad_bias.size(); ++i) grad_bias_[i] += g.grad_bias[i];
  }
  return std::move(g.grad_input);
}

void PointwiseLayer::collect(std::vector<ParamGroup>& out) {
  out.push_back({"pointwise.matrix", w_.matrix, grad_matrix_});
  if (has_bias_) out.push_back({"pointwise.bias", w_.bias, grad_bias_});
}

void PointwiseLayer::zero_grad() {
  std::fill(grad_matrix_.begin(), grad_matrix_.end(), 0.0);
  std::fill(grad_bias_.begin(), grad_bias_.end(), 0.0);
}

// ---- relu ----

FeatureMap ReluLayer::forward(const FeatureMap& x) {
  input_ = x;
  return relu(x);
}

FeatureMap ReluLayer::backward(const FeatureMap& grad_output) {
  return relu_backward(input_, grad_output);
}

// ---- 3x3 depth-wise ----

DepthwiseConv3x3Layer::DepthwiseConv3x3Layer(std::size_t channels, BoxRng& rng)
    : channels_(channels), weights_(channels * 9), grads_(channels * 9, 0.0) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / 9.0));
  for (double& v : weights_) v = dist(rng);
}

FeatureMap DepthwiseConv3x3Layer::forward(const FeatureMap& x) {
  const Shape s = x.shape();
  if (s.channels != channels_) {
    throw DimensionError("depthwise3x3: expected " + std::to_string(channels_) + " channels, got " +
                         to_string(s));
  }
  input_ = x;
  FeatureMap y(s);
  const auto h = static_cast<long>(s.height), w = static_cast<long>(s.width);
  for (std::size_t c = 0; c < channels_; ++c) {
    const double* k = &weights_[c * 9];
    for (long i = 0; i < h; ++i) {
      for (long j = 0; j < w; ++j) {
        double acc = 0.0;
        for (long di = -1; di <= 1; ++di) {
          const long ii = i + di;
          if (ii < 0 || ii >= h) continue;
          for (long dj = -1; dj <= 1; ++dj) {
            const long jj = j + dj;
            if (jj < 0 || jj >= w) continue;
            acc += k[(di + 1) * 3 + (dj + 1)] * x(c, static_cast<std::size_t>(ii), static_cast<std::size_t>(jj));
          }
        }
        y(c, static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = acc;
      }
    }
  }
  return y;
}

FeatureMap DepthwiseConv3x3Layer::backward(const FeatureMap& grad_output) {
  const Shape s = input_.shape();
  if (grad_output.shape() != s) {
    throw DimensionError("depthwise3x3 backward: grad " + to_string(grad_output.shape()));
  }
  FeatureMap gx(s);
  const auto h = static_cast<long>(s.height), w = static_cast<long>(s.width);
  for (std::size_t c = 0; c < channels_; ++c) {
    const double* k = &weights_[c * 9];
    double* gk = &grads_[c * 9];
    for (long i = 0; i < h; ++i) {
      for (long j = 0; j < w; ++j) {
        const double g = grad_output(c, static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        if (g == 0.0) continue;
        for (long di = -1; di <= 1; ++di) {
          const long ii = i + di;
          if (ii < 0 || ii >= h) continue;
          for (long dj = -1; dj <= 1; ++dj) {
            const long jj = j + dj;
            if (jj < 0 || jj >= w) continue;
            const auto t = static_cast<std::size_t>((di + 1) * 3 + (dj + 1));
            const auto ui = static_cast<std::size_t>(ii), uj = static_cast<std::size_t>(jj);
            gk[t] += g * input_(c, ui, uj);
            gx(c, ui, uj) += g * k[t];
          }
        }
      }
    }
  }
  return gx;
}

void DepthwiseConv3x3Layer::collect(std::vector<ParamGroup>& out) {
  out.push_back({"depthwise3x3", weights_, grads_});
}

void DepthwiseConv3x3Layer::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

// ---- box ----

namespace {

std::vector<BoxParams> random_boxes(std::size_t channels, int k, BoxVariant variant, BoxRng& rng) {
  std::vector<BoxParams> boxes;
  boxes.reserve(channels);
  for (std::size_t c = 0; c < channels; ++c) boxes.push_back(init_params(k, variant, rng));
  return boxes;
}

void pack(const BoxParams& b, double* out) {
  out[0] = b.theta_xl;
  out[1] = b.theta_xh;
  out[2] = b.theta_yl;
  out[3] = b.theta_yh;
  out[4] = b.split_x;
  out[5] = b.split_y;
  for (std::size_t i = 0; i < 4; ++i) out[6 + i] = b.weights[i];
}

BoxParams unpack(const BoxParams& like, const double* in) {
  BoxParams b = like;
  b.theta_xl = in[0];
  b.theta_xh = in[1];
  b.theta_yl = in[2];
  b.theta_yh = in[3];
  b.split_x = in[4];
  b.split_y = in[5];
  for (std::size_t i = 0; i < 4; ++i) b.weights[i] = in[6 + i];
  return b;
}

}  // namespace

BoxConvModule::BoxConvModule(std::size_t channels, int k, BoxVariant variant, BoxRng& rng,
                             ExecOptions exec)
    : BoxConvModule(random_boxes(channels, k, variant, rng), exec) {}

BoxConvModule::BoxConvModule(std::vector<BoxParams> boxes, ExecOptions exec)
    : layer_(std::move(boxes)), exec_(exec) {
  sync_flat();
  grads_.assign(flat_.size(), 0.0);
}

void BoxConvModule::sync_flat() {
  flat_.resize(layer_.channels() * kParamsPerBox);
  for (std::size_t c = 0; c < layer_.channels(); ++c) pack(layer_.boxes()[c], &flat_[c * kParamsPerBox]);
}

void BoxConvModule::load_flat() {
  bool changed = false;
  std::vector<BoxParams> boxes;
  boxes.reserve(layer_.channels());
  for (std::size_t c = 0; c < layer_.channels(); ++c) {
    boxes.push_back(unpack(layer_.boxes()[c], &flat_[c * kParamsPerBox]));
    changed = changed || boxes.back() != layer_.boxes()[c];
  }
  if (changed) layer_.set_boxes(std::move(boxes));
}

FeatureMap BoxConvModule::forward(const FeatureMap& x) {
  load_flat();
  ForwardResult r = satconv::forward(layer_, x, exec_);
  saved_ = std::move(r.saved);
  return std::move(r.output);
}

FeatureMap BoxConvModule::backward(const FeatureMap& grad_output) {
  LayerGradients g = satconv::backward(layer_, saved_, grad_output, exec_);
  for (std::size_t c = 0; c < g.grad_boxes.size(); ++c) {
    const BoxGradients& b = g.grad_boxes[c];
    double* out = &grads_[c * kParamsPerBox];
    for (std::size_t i = 0; i < 4; ++i) out[i] += b.theta[i];
    out[4] += b.split_x;
    out[5] += b.split_y;
    for (std::size_t i = 0; i < 4; ++i) out[6 + i] += b.weights[i];
  }
  return std::move(g.grad_input);
}

void BoxConvModule::collect(std::vector<ParamGroup>& out) {
  out.push_back({"box", flat_, grads_});
}

void BoxConvModule::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

void BoxConvModule::after_step() {
  std::vector<BoxParams> boxes;
  boxes.reserve(layer_.channels());
  for (std::size_t c = 0; c < layer_.channels(); ++c) {
    boxes.push_back(project_params(unpack(layer_.boxes()[c], &flat_[c * kParamsPerBox])));
  }
  layer_.set_boxes(std::move(boxes));
  sync_flat();
}

// ---- blocks ----

HalfProcessBlock::HalfProcessBlock(std::size_t channels, std::unique_ptr<Layer> inner)
    : channels_(channels), inner_(std::move(inner)) {
  if (channels_ < 2 || channels_ % 2 != 0) {
    throw ContractViolation("half-process block needs an even channel count, got " +
                            std::to_string(channels_));
  }
  if (!inner_) inner_ = std::make_unique<Sequential>();
}

FeatureMap HalfProcessBlock::forward(const FeatureMap& x) {
  if (x.shape().channels != channels_) {
    throw DimensionError("half-process block: expected " + std::to_string(channels_) +
                         " channels, got " + to_string(x.shape()));
  }
  auto [keep, work] = channel_split(x, channels_ / 2);
  FeatureMap done = inner_->forward(work);
  return channel_shuffle(channel_concat(keep, done), 2);
}

FeatureMap HalfProcessBlock::backward(const FeatureMap& grad_output) {
  auto [g_keep, g_done] = channel_split(channel_unshuffle(grad_output, 2), channels_ / 2);
  return channel_concat(g_keep, inner_->backward(g_done));
}

void HalfProcessBlock::collect(std::vector<ParamGroup>& out) { inner_->collect(out); }
void HalfProcessBlock::zero_grad() { inner_->zero_grad(); }
void HalfProcessBlock::after_step() { inner_->after_step(); }

ChannelChangeBlock::ChannelChangeBlock(std::size_t in, std::size_t out, std::unique_ptr<Layer> left,
                                       std::unique_ptr<Layer> right)
    : in_(in), out_(out), left_(std::move(left)), right_(std::move(right)) {
  if (out_ < 2 || out_ % 2 != 0) {
    throw ContractViolation("channel-change block needs an even output count, got " +
                            std::to_string(out_));
  }
}

FeatureMap ChannelChangeBlock::forward(const FeatureMap& x) {
  if (x.shape().channels != in_) {
    throw DimensionError("channel-change block: expected " + std::to_string(in_) +
                         " channels, got " + to_string(x.shape()));
  }
  FeatureMap a = left_->forward(x);
  FeatureMap b = right_->forward(x);
  return channel_shuffle(channel_concat(a, b), 2);
}

FeatureMap ChannelChangeBlock::backward(const FeatureMap& grad_output) {
  auto [ga, gb] = channel_split(channel_unshuffle(grad_output, 2), out_ / 2);
  return add(left_->backward(ga), right_->backward(gb));
}

void ChannelChangeBlock::collect(std::vector<ParamGroup>& out) {
  left_->collect(out);
  right_->collect(out);
}
void ChannelChangeBlock::zero_grad() {
  left_->zero_grad();
  right_->zero_grad();
}
void ChannelChangeBlock::after_step() {
  left_->after_step();
  right_->after_step();
}

// ---- block specs ----

namespace {

int parse_int(std::string_view s, std::string_view whole) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || v <= 0) {
    throw ConfigError("bad number in block '" + std::string(whole) + "'");
  }
  return v;
}

}  // namespace

BlockSpec parse_block(std::string_view text) {
  BlockSpec b;
  std::string_view rest;
  if (text.starts_with("half-")) {
    b.kind = BlockSpec::Kind::Half;
    rest = text.substr(5);
  } else if (text.starts_with("change-")) {
    b.kind = BlockSpec::Kind::Change;
    rest = text.substr(7);
    const auto colon = rest.find(':');
    if (colon == std::string_view::npos) {
      throw ConfigError("block '" + std::string(text) + "' needs ':<channels>'");
    }
    b.out_channels = static_cast<std::size_t>(parse_int(rest.substr(colon + 1), text));
    rest = rest.substr(0, colon);
  } else {
    throw ConfigError("unknown block '" + std::string(text) + "'");
  }
  if (rest == "conv3") {
    b.box_k = 0;
  } else if (rest.starts_with("box")) {
    b.box_k = parse_int(rest.substr(3), text);
    if (b.box_k < 3 || b.box_k % 2 == 0) {
      throw ConfigError("block '" + std::string(text) + "': box window must be odd and >= 3");
    }
  } else {
    throw ConfigError("unknown block '" + std::string(text) + "'");
  }
  return b;
}

std::string to_string(const BlockSpec& b) {
  std::string s = b.kind == BlockSpec::Kind::Half ? "half-" : "change-";
  s += b.box_k == 0 ? std::string("conv3") : "box" + std::to_string(b.box_k);
  if (b.kind == BlockSpec::Kind::Change) s += ":" + std::to_string(b.out_channels);
  return s;
}

// ---- network ----

namespace {

struct Builder {
  BoxRng& rng;
  ExecOptions exec;
  BoxVariant variant;
  std::vector<const BoxConvModule*>& boxes;

  std::unique_ptr<Layer> depthwise(std::size_t channels, int box_k) {
    if (box_k == 0) return std::make_unique<DepthwiseConv3x3Layer>(channels, rng);
    auto m = std::make_unique<BoxConvModule>(channels, box_k, variant, rng, exec);
    boxes.push_back(m.get());
    return m;
  }

  // pointwise -> relu -> depth-wise -> pointwise -> relu
  std::unique_ptr<Layer> transform(std::size_t in, std::size_t out, int box_k) {
    auto s = std::make_unique<Sequential>();
    s->push(std::make_unique<PointwiseLayer>(in, in, rng));
    s->push(std::make_unique<ReluLayer>());
    s->push(depthwise(in, box_k));
    s->push(std::make_unique<PointwiseLayer>(in, out, rng));
    s->push(std::make_unique<ReluLayer>());
    return s;
  }

  // depth-wise -> pointwise -> relu
  std::unique_ptr<Layer> shortcut(std::size_t in, std::size_t out, int box_k) {
    auto s = std::make_unique<Sequential>();
    s->push(depthwise(in, box_k));
    s->push(std::make_unique<PointwiseLayer>(in, out, rng));
    s->push(std::make_unique<ReluLayer>());
    return s;
  }
};

}  // namespace

ToyNetwork::ToyNetwork(const NetworkSpec& spec, BoxRng& rng, ExecOptions exec) {
  Builder b{rng, exec, spec.box_variant, boxes_};
  body_.push(std::make_unique<PointwiseLayer>(spec.in_channels, spec.width, rng));
  body_.push(std::make_unique<ReluLayer>());
  std::size_t channels = spec.width;
  for (const BlockSpec& blk : spec.blocks) {
    if (blk.kind == BlockSpec::Kind::Half) {
      const std::size_t half = channels / 2;
      body_.push(std::make_unique<HalfProcessBlock>(channels, b.transform(half, half, blk.box_k)));
    } else {
      const std::size_t half = blk.out_channels / 2;
      auto left = b.shortcut(channels, half, blk.box_k);
      auto right = b.transform(channels, half, blk.box_k);
      body_.push(std::make_unique<ChannelChangeBlock>(channels, blk.out_channels, std::move(left),
                                                      std::move(right)));
      channels = blk.out_channels;
    }
  }
  PointwiseWeights head(spec.out_channels, channels);
  body_.push(std::make_unique<PointwiseLayer>(std::move(head)));
}

FeatureMap ToyNetwork::forward(const FeatureMap& x) {
  FeatureMap y = body_.forward(x);
  if (y.shape().height != x.shape().height || y.shape().width != x.shape().width) {
    throw ContractViolation("toy network changed the spatial size");
  }
  return y;
}

FeatureMap ToyNetwork::backward(const FeatureMap& grad_output) { return body_.backward(grad_output); }
void ToyNetwork::collect(std::vector<ParamGroup>& out) { body_.collect(out); }
void ToyNetwork::zero_grad() { body_.zero_grad(); }
void ToyNetwork::after_step() { body_.after_step(); }

std::vector<ParamGroup> ToyNetwork::parameters() {
  std::vector<ParamGroup> out;
  collect(out);
  return out;
}

}  // namespace satconv
