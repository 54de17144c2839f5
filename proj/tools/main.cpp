#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "satconv/box_kernel.hpp"
#include "satconv/errors.hpp"
#include "satconv/tools/bench.hpp"
#include "satconv/tools/gradcheck.hpp"
#include "satconv/tools/run_train.hpp"
#include "satconv/tools/svg.hpp"
#include "satconv/tools/threads.hpp"

namespace {

using namespace satconv;

void parse_size(const std::string& text, std::size_t& h, std::size_t& w) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t used = 0;
    h = std::stoul(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument(text);
    w = std::stoul(text.substr(x + 1), &used);
    if (used != text.size() - x - 1 || h == 0 || w == 0) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw CLI::ValidationError("--size", "expected HxW, got '" + text + "'");
  }
}

int cmd_gradcheck(tools::GradcheckOptions o) {
  const tools::GradcheckReport report = tools::run_gradcheck(o);
  tools::print_report(std::cout, o, report);
  return report.ok() ? 0 : 1;
}

int cmd_bench(tools::BenchOptions o, const std::string& size, std::optional<unsigned> threads, bool no_times,
              const std::string& output) {
  parse_size(size, o.height, o.width);
  o.threads = tools::resolve_threads(threads);
  const auto rows = tools::run_bench(o);
  std::ostringstream csv;
  tools::write_csv(csv, rows, !no_times);
  if (output.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream out(output, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + output + "'");
    out << csv.str();
  }
  // Forward-equivalence smoke test between the two exact methods.
  for (int k : o.kernels) {
    const auto* box = tools::find_row(rows, "box_sat", k);
    const auto* naive = tools::find_row(rows, "naive_dense", k);
    const double scale = std::max({std::abs(box->checksum), std::abs(naive->checksum), 1e-8});
    if (std::abs(box->checksum - naive->checksum) / scale > 1e-9) {
      std::cerr << "checksum mismatch at k=" << k << "\n";
      return 1;
    }
  }
  return 0;
}

int cmd_export(const std::string& ckpt, const std::string& svg_path) {
  std::ifstream in(ckpt);
  if (!in) throw ParseError("cannot open checkpoint '" + ckpt + "'");
  const auto boxes = read_boxes(in);
  std::ofstream out(svg_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + svg_path + "'");
  out << tools::render_boxes_svg(boxes);
  std::cout << "exported " << boxes.size() << " boxes to " << svg_path << "\n";
  return 0;
}

int cmd_train(const std::string& config_path) {
  const TrainConfig config = load_train_config(config_path);
  const tools::TrainArtifacts a = tools::run_training(config, std::cout);
  char buf[96];
  std::snprintf(buf, sizeof buf, "final accuracy %.17g\n", a.final_accuracy);
  std::cout << buf;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Box convolution with summed-area tables"};
  app.require_subcommand(1);

  tools::GradcheckOptions grad;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of every box gradient");
  gc->add_option("--seed", grad.seed, "RNG seed");
  gc->add_option("--sizes", grad.sizes, "Square input sizes")->delimiter(',');
  gc->add_option("--kernels", grad.kernels, "Window sizes")->delimiter(',');
  gc->add_option("--repeats", grad.repeats, "Random boxes per configuration");
  gc->add_option("--inject-fault", grad.fault)->group("");

  tools::BenchOptions bench;
  std::string size = "256x256";
  std::optional<unsigned> threads;
  bool no_times = false;
  std::string bench_out;
  auto* bc = app.add_subcommand("bench", "Kernel-size scaling benchmark, CSV on stdout");
  bc->add_option("--k", bench.kernels, "Window sizes")->delimiter(',');
  bc->add_option("--size", size, "Input size HxW");
  bc->add_option("--channels", bench.channels, "Channels")->check(CLI::PositiveNumber);
  bc->add_option("--repeats", bench.repeats, "Timed runs per row (median)")->check(CLI::Range(5, 1000000));
  bc->add_option("--threads", threads, "Workers for box_sat (default SATCONV_THREADS or 1)");
  bc->add_option("--seed", bench.seed, "RNG seed");
  bc->add_option("--output", bench_out, "Write CSV to a file");
  bc->add_flag("--no-times", no_times, "Print '-' for wall_ms so output is reproducible");

  std::string ckpt, svg;
  auto* ec = app.add_subcommand("export-boxes", "Render a box checkpoint as SVG");
  ec->add_option("checkpoint", ckpt)->required();
  ec->add_option("output", svg)->required();

  std::string config;
  auto* tc = app.add_subcommand("train", "Run a training config");
  tc->add_option("config", config)->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (gc->parsed()) return cmd_gradcheck(grad);
    if (bc->parsed()) return cmd_bench(bench, size, threads, no_times, bench_out);
    if (ec->parsed()) return cmd_export(ckpt, svg);
    if (tc->parsed()) return cmd_train(config);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
