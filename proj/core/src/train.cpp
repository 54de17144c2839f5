#include "satconv/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "satconv/adam.hpp"
#include "satconv/errors.hpp"

namespace satconv {

double scheduled_lr(double base, std::size_t step, std::size_t total) {
  return 4 * step >= 3 * total ? 0.1 * base : base;
}

Optimizer::Optimizer(std::vector<ParamGroup> groups, AdamOptions options) : groups_(std::move(groups)) {
  states_.reserve(groups_.size());
  for (const auto& g : groups_) {
    AdamOptions o = options;
    o.lr *= g.lr_scale;
    states_.emplace_back(g.values.size(), o);
  }
}

void Optimizer::set_lr(double lr) {
  for (std::size_t i = 0; i < groups_.size(); ++i) states_[i].options.lr = lr * groups_[i].lr_scale;
}

void Optimizer::step() {
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    adam_step(states_[i], groups_[i].values, groups_[i].grads);
  }
}

DenseKernel laplacian_of_gaussian(int size, double sigma) {
  if (size < 1 || size % 2 == 0) throw ContractViolation("laplacian_of_gaussian: odd size required");
  DenseKernel k(size);
  const int c = size / 2;
  const double s2 = sigma * sigma;
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const double r2 = static_cast<double>((i - c) * (i - c) + (j - c) * (j - c));
      k.at(i, j) = -1.0 / (std::numbers::pi * s2 * s2) * (1.0 - r2 / (2.0 * s2)) *
                   std::exp(-r2 / (2.0 * s2));
    }
  }
  return k;
}

DenseKernel embed_kernel(const DenseKernel& kernel, int k) {
  if (kernel.dilation != 1 || kernel.size > k || (k - kernel.size) % 2 != 0) {
    throw ContractViolation("embed_kernel: kernel of size " + std::to_string(kernel.size) +
                            " does not center in a window of " + std::to_string(k));
  }
  DenseKernel out(k);
  const int off = (k - kernel.size) / 2;
  for (int i = 0; i < kernel.size; ++i) {
    for (int j = 0; j < kernel.size; ++j) out.at(i + off, j + off) = kernel.at(i, j);
  }
  return out;
}

DenseKernel composite_kernel(const std::vector<BoxParams>& boxes, const std::vector<double>& weights) {
  if (boxes.size() != weights.size()) {
    throw DimensionError("composite_kernel: " + std::to_string(boxes.size()) + " boxes, " +
                         std::to_string(weights.size()) + " weights");
  }
  if (boxes.empty()) return DenseKernel{};
  DenseKernel out(boxes.front().max_kernel);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const DenseKernel e = effective_kernel(boxes[i]);
    for (std::size_t t = 0; t < out.weights.size(); ++t) out.weights[t] += weights[i] * e.weights[t];
  }
  return out;
}

double composite_error(const std::vector<BoxParams>& boxes, const std::vector<double>& weights,
                       const DenseKernel& target) {
  double norm = 0.0;
  for (double v : target.weights) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0) throw ContractViolation("composite_error: zero target");
  if (boxes.empty()) return 1.0;
  const DenseKernel t = embed_kernel(target, boxes.front().max_kernel);
  const DenseKernel c = composite_kernel(boxes, weights);
  double diff = 0.0;
  for (std::size_t i = 0; i < t.weights.size(); ++i) {
    const double d = c.weights[i] - t.weights[i];
    diff += d * d;
  }
  return std::sqrt(diff) / norm;
}

KernelApproxResult train_kernel_approx(const DenseKernel& target, const KernelApproxOptions& o) {
  check_kernel_size(o.k);
  const DenseKernel window = embed_kernel(target, o.k);
  KernelApproxResult result;
  if (o.n_boxes == 0) {
    result.initial_error = result.final_error = composite_error({}, {}, target);
    return result;
  }

  BoxRng rng(o.seed);
  BoxConvModule boxes(o.n_boxes, o.k, o.variant, rng);
  PointwiseLayer mix(PointwiseWeights(1, o.n_boxes), /*bias=*/false);
  result.initial_boxes = boxes.layer().boxes();
  result.initial_error = composite_error(result.initial_boxes, mix.weights().matrix, target);

  std::vector<ParamGroup> groups;
  boxes.collect(groups);
  mix.collect(groups);
  double peak = 0.0;
  for (double v : target.weights) peak = std::max(peak, std::abs(v));
  groups.back().lr_scale = o.mix_lr_scale * peak;
  Optimizer opt(std::move(groups), AdamOptions{.lr = o.lr});

  const std::size_t n = o.image_size;
  std::uniform_real_distribution<double> pixel(-1.0, 1.0);
  FeatureMap input(1, n, n);
  FeatureMap stacked(o.n_boxes, n, n);
  result.log.reserve(o.steps);
  for (std::size_t step = 1; step <= o.steps; ++step) {
    for (double& v : input.data()) v = pixel(rng);
    for (std::size_t c = 0; c < o.n_boxes; ++c) std::ranges::copy(input.plane(0), stacked.plane(c).begin());
    FeatureMap want(1, n, n);
    const auto ref = naive_conv<double>(input.plane(0), n, n, window);
    std::ranges::copy(ref, want.plane(0).begin());

    boxes.zero_grad();
    mix.zero_grad();
    const FeatureMap pred = mix.forward(boxes.forward(stacked));
    const LossResult loss = mse_loss(pred, want);
    boxes.backward(mix.backward(loss.grad));

    opt.set_lr(scheduled_lr(o.lr, step - 1, o.steps));
    opt.step();
    boxes.after_step();

    const double err = composite_error(boxes.layer().boxes(), mix.weights().matrix, target);
    result.log.push_back({step, loss.loss, std::max(0.0, 1.0 - err)});
  }
  result.boxes = boxes.layer().boxes();
  result.weights = mix.weights().matrix;
  result.final_error = composite_error(result.boxes, result.weights, target);
  return result;
}

KeypointSample make_keypoint_sample(std::size_t size, BoxRng& rng) {
  if (size < 12) throw ContractViolation("make_keypoint_sample: image too small");
  const double margin = 4.0;
  std::uniform_real_distribution<double> pos(margin, static_cast<double>(size - 1) - margin);
  std::uniform_int_distribution<std::size_t> pix(0, size - 1);
  std::uniform_real_distribution<double> spike(1.0, 1.5);
  std::normal_distribution<double> noise(0.0, 0.1);

  KeypointSample s{FeatureMap(1, size, size), {pos(rng), pos(rng)}};
  const double sigma = 2.5;
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      const double dx = static_cast<double>(j) - s.point.x, dy = static_cast<double>(i) - s.point.y;
      s.image(0, i, j) = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    }
  }
  for (int d = 0; d < 3; ++d) {
    const std::size_t i = pix(rng), j = pix(rng);
    s.image(0, i, j) += spike(rng);
  }
  for (double& v : s.image.data()) v += noise(rng);
  return s;
}

NetworkSpec default_keypoint_network() {
  NetworkSpec spec;
  spec.width = 8;
  spec.blocks = {parse_block("half-conv3"), parse_block("half-box13"), parse_block("change-box9:12"),
                 parse_block("half-box9"), parse_block("half-conv3")};
  return spec;
}

namespace {

bool hit(const Keypoint& got, const Keypoint& want, double radius) {
  return std::hypot(got.x - want.x, got.y - want.y) <= radius;
}

// Held-out samples come from a stream independent of the training draws.
constexpr std::uint64_t kEvalStream = 0x9e3779b97f4a7c15ULL;

}  // namespace

double evaluate_keypoints(ToyNetwork& net, const KeypointOptions& o) {
  if (o.eval_samples == 0) return 0.0;
  BoxRng rng(o.seed ^ kEvalStream);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < o.eval_samples; ++i) {
    const KeypointSample s = make_keypoint_sample(o.image_size, rng);
    if (hit(decode_keypoint(net.forward(s.image)), s.point, o.radius)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(o.eval_samples);
}

KeypointResult train_toy_keypoints(const KeypointOptions& o, const StepObserver& observer) {
  if (o.batch == 0) throw ConfigError("batch must be positive");
  if (o.network.in_channels != 1 || o.network.out_channels != 1) {
    throw ConfigError("keypoint network must map 1 channel to 1 heatmap");
  }
  BoxRng rng(o.seed);
  KeypointResult result;
  result.network = std::make_unique<ToyNetwork>(o.network, rng, o.exec);
  ToyNetwork& net = *result.network;
  Optimizer opt(net.parameters(), AdamOptions{.lr = o.lr});

  result.log.reserve(o.steps);
  for (std::size_t step = 1; step <= o.steps; ++step) {
    net.zero_grad();
    double loss = 0.0;
    std::size_t hits = 0;
    for (std::size_t b = 0; b < o.batch; ++b) {
      const KeypointSample s = make_keypoint_sample(o.image_size, rng);
      const FeatureMap target = gaussian_target(s.point, o.image_size, o.image_size);
      const FeatureMap pred = net.forward(s.image);
      LossResult l = mse_loss(pred, target);
      for (double& g : l.grad.data()) g /= static_cast<double>(o.batch);
      net.backward(l.grad);
      loss += l.loss / static_cast<double>(o.batch);
      if (hit(decode_keypoint(pred), s.point, o.radius)) ++hits;
    }
    opt.set_lr(scheduled_lr(o.lr, step - 1, o.steps));
    opt.step();
    net.after_step();
    if (observer) observer(step, net);
    result.log.push_back({step, loss, static_cast<double>(hits) / static_cast<double>(o.batch)});
  }
  result.accuracy = evaluate_keypoints(net, o);
  return result;
}

}  // namespace satconv
