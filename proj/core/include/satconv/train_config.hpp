#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "satconv/box_kernel.hpp"
#include "satconv/nn.hpp"
#include "satconv/reference.hpp"
#include "satconv/train.hpp"

namespace satconv {

enum class TaskKind { KernelApprox, Keypoints };

/// Parsed training config. The file is `key = value` per line; '#' starts a
/// comment. Keys:
///   task         kernel_approx | keypoints            (required)
///   steps, lr, seed, output, log
///   kernel_approx: k, n_boxes, target (log | box:xl,xh,yl,yh), sigma,
///                  target_size, box_variant
///   keypoints:     image_size, channels, blocks (comma separated),
///                  batch, eval_samples, box_variant
struct TrainConfig {
  TaskKind task = TaskKind::Keypoints;
  std::size_t steps = 2000;
  double lr = 1e-3;  // kernel_approx defaults to its own rate when unset
  std::uint64_t seed = 1;
  std::string output = "checkpoint";
  std::string log = "train_log.csv";
  BoxVariant box_variant = BoxVariant::Single;

  int k = 13;
  std::size_t n_boxes = 4;
  std::string target = "log";
  double sigma = 1.4;
  int target_size = 9;

  std::size_t image_size = 32;
  std::size_t channels = 8;
  std::vector<BlockSpec> blocks;
  std::size_t batch = 4;
  std::size_t eval_samples = 200;
};

// Throws ConfigError naming the line and field for any invalid entry, before
// any training starts.
TrainConfig parse_train_config(std::istream& in, const std::string& source = "config");
TrainConfig load_train_config(const std::filesystem::path& path);

// Builds the target described by config.target inside a k x k window.
DenseKernel config_target(const TrainConfig& config);

KernelApproxOptions kernel_approx_options(const TrainConfig& config);
KeypointOptions keypoint_options(const TrainConfig& config);

}  // namespace satconv
