#include "satconv/tools/run_train.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "satconv/errors.hpp"
#include "satconv/feature_map_io.hpp"

namespace satconv::tools {

namespace {

std::ofstream open_out(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  return out;
}

void write_outputs(TrainArtifacts& a, const std::vector<BoxParams>& boxes, const std::vector<double>& dense,
                   const std::vector<StepRecord>& log) {
  {
    std::ofstream out = open_out(a.boxes_path);
    write_boxes(out, boxes);
  }
  if (!dense.empty()) {
    std::ofstream out = open_out(a.weights_path);
    write_feature_map(out, FeatureMap(Shape{1, 1, dense.size()}, dense));
  } else {
    a.weights_path.clear();
  }
  std::ofstream out = open_out(a.log_path);
  write_train_log(out, log);
}

}  // namespace

void write_train_log(std::ostream& out, const std::vector<StepRecord>& log) {
  out << "step,loss,accuracy\n";
  char buf[128];
  for (const StepRecord& r : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", r.step, r.loss, r.accuracy);
    out << buf;
  }
}

TrainArtifacts run_training(const TrainConfig& config, std::ostream& summary) {
  TrainArtifacts a;
  a.boxes_path = config.output + ".boxes";
  a.weights_path = config.output + ".weights.satfm";
  a.log_path = config.log;
  char buf[160];

  if (config.task == TaskKind::KernelApprox) {
    const KernelApproxResult r = train_kernel_approx(config_target(config), kernel_approx_options(config));
    a.final_error = r.final_error;
    a.final_accuracy = r.log.empty() ? std::max(0.0, 1.0 - r.final_error) : r.log.back().accuracy;
    write_outputs(a, r.boxes, r.weights, r.log);
    std::snprintf(buf, sizeof buf, "kernel_approx steps=%zu initial_error=%.17g final_error=%.17g\n",
                  config.steps, r.initial_error, r.final_error);
    summary << buf;
  } else {
    KeypointResult r = train_toy_keypoints(keypoint_options(config));
    a.final_accuracy = r.accuracy;
    std::vector<BoxParams> boxes;
    for (const BoxConvModule* m : r.network->box_modules()) {
      boxes.insert(boxes.end(), m->layer().boxes().begin(), m->layer().boxes().end());
    }
    std::vector<double> dense;
    for (const ParamGroup& g : r.network->parameters()) {
      if (g.name != "box") dense.insert(dense.end(), g.values.begin(), g.values.end());
    }
    write_outputs(a, boxes, dense, r.log);
    std::snprintf(buf, sizeof buf, "keypoints steps=%zu heldout_accuracy=%.17g\n", config.steps, r.accuracy);
    summary << buf;
  }
  summary << "wrote " << a.boxes_path;
  if (!a.weights_path.empty()) summary << " " << a.weights_path;
  summary << " " << a.log_path << "\n";
  return a;
}

}  // namespace satconv::tools
