#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "satconv/train.hpp"
#include "satconv/train_config.hpp"

namespace satconv::tools {

struct TrainArtifacts {
  std::string boxes_path;    // box checkpoint text
  std::string weights_path;  // dense weights as a 1 x 1 x N feature map; empty if none
  std::string log_path;
  double final_accuracy = 0.0;
  double final_error = 0.0;  // kernel_approx only
};

void write_train_log(std::ostream& out, const std::vector<StepRecord>& log);

/// Runs the configured task single-threaded in 64-bit and writes the
/// checkpoint pair and CSV log. Paths are <output>.boxes,
/// <output>.weights.satfm and config.log.
TrainArtifacts run_training(const TrainConfig& config, std::ostream& summary);

}  // namespace satconv::tools
