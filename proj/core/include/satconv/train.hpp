#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "satconv/adam.hpp"
#include "satconv/box_kernel.hpp"
#include "satconv/feature_map.hpp"
#include "satconv/heatmap.hpp"
#include "satconv/nn.hpp"
#include "satconv/reference.hpp"

namespace satconv {

struct StepRecord {
  std::size_t step = 0;  // 1-based
  double loss = 0.0;
  double accuracy = 0.0;
};

// Constant rate with one x0.1 drop once 75% of the steps are done.
double scheduled_lr(double base, std::size_t step, std::size_t total);

// Gathers every parameter group of a model and steps them with Adam.
class Optimizer {
 public:
  Optimizer(std::vector<ParamGroup> groups, AdamOptions options);
  // Base rate; each group steps with lr * group.lr_scale.
  void set_lr(double lr);
  void step();

 private:
  std::vector<ParamGroup> groups_;
  std::vector<AdamState> states_;
};

// Normalized Laplacian of Gaussian sampled on a size x size grid.
DenseKernel laplacian_of_gaussian(int size, double sigma);

// Target embedded centered in a k x k window.
DenseKernel embed_kernel(const DenseKernel& kernel, int k);

// sum_i weights[i] * effective_kernel(boxes[i]).
DenseKernel composite_kernel(const std::vector<BoxParams>& boxes, const std::vector<double>& weights);

// Relative L2 distance between the composite kernel and the target; 1 for an
// empty box list.
double composite_error(const std::vector<BoxParams>& boxes, const std::vector<double>& weights,
                       const DenseKernel& target);

struct KernelApproxOptions {
  int k = 9;
  std::size_t n_boxes = 4;
  std::size_t steps = 2000;
  double lr = 1e-2;
  // Combination weights live on the target's value scale rather than the unit
  // theta range, so they step at lr * mix_lr_scale * max|target|.
  double mix_lr_scale = 0.4;
  std::uint64_t seed = 1;
  std::size_t image_size = 24;
  BoxVariant variant = BoxVariant::Single;
};

struct KernelApproxResult {
  std::vector<BoxParams> initial_boxes;
  std::vector<BoxParams> boxes;
  std::vector<double> weights;
  double initial_error = 1.0;
  double final_error = 1.0;
  // accuracy holds max(0, 1 - kernel error) after the step.
  std::vector<StepRecord> log;
};

/// Learns n boxes and a bias-free pointwise combination so that the stack
/// reproduces naive_conv with the target on random inputs. The combination
/// weights start at zero.
KernelApproxResult train_kernel_approx(const DenseKernel& target, const KernelApproxOptions& options);

struct KeypointSample {
  FeatureMap image;
  Keypoint point;
};

/// One blob with a random sub-pixel center plus impulse distractors and
/// Gaussian noise. The keypoint is the blob center.
KeypointSample make_keypoint_sample(std::size_t size, BoxRng& rng);

struct KeypointOptions {
  std::size_t image_size = 32;
  NetworkSpec network;
  std::size_t steps = 2000;
  std::size_t batch = 4;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  std::size_t eval_samples = 200;
  double radius = 2.0;
  ExecOptions exec;
};

NetworkSpec default_keypoint_network();

struct KeypointResult {
  std::unique_ptr<ToyNetwork> network;
  double accuracy = 0.0;  // held out
  // accuracy holds the decode hit rate on the step's batch.
  std::vector<StepRecord> log;
};

// Called after every optimizer step, once the boxes are projected.
using StepObserver = std::function<void(std::size_t step, ToyNetwork& net)>;

KeypointResult train_toy_keypoints(const KeypointOptions& options, const StepObserver& observer = {});

// Fraction of held-out samples decoded within options.radius of the truth.
double evaluate_keypoints(ToyNetwork& net, const KeypointOptions& options);

}  // namespace satconv
