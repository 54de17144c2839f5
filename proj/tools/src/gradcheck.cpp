#include "satconv/tools/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "satconv/box_conv.hpp"
#include "satconv/reference.hpp"
#include "satconv/tensor_ops.hpp"

namespace satconv::tools {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

bool clear_of_lattice(const std::vector<AxisSite>& sites, double margin) {
  for (const AxisSite& s : sites) {
    const double f = s.coord - std::floor(s.coord);
    if (f < margin || f > 1.0 - margin) return false;
  }
  return true;
}

std::size_t category_index(std::string_view name) {
  return static_cast<std::size_t>(std::ranges::find(kGradCategories, name) - kGradCategories.begin());
}

double& theta_ref(BoxParams& b, std::size_t i) {
  switch (i) {
    case 0: return b.theta_xl;
    case 1: return b.theta_xh;
    case 2: return b.theta_yl;
    default: return b.theta_yh;
  }
}

// Pixels that reach at least one output through a nonzero weight of the
// effective dense kernel.
std::vector<bool> support_mask(const BoxParams& box, const GradcheckCase& c) {
  const DenseKernel kernel = effective_kernel(box);
  const long anchor = kernel.anchor();
  const long h = static_cast<long>(c.height), w = static_cast<long>(c.width);
  const long oh = static_cast<long>(output_extent(c.height, c.stride));
  const long ow = static_cast<long>(output_extent(c.width, c.stride));
  std::vector<bool> mask(c.height * c.width, false);
  for (long oy = 0; oy < oh; ++oy) {
    for (long ox = 0; ox < ow; ++ox) {
      for (int i = 0; i < kernel.size; ++i) {
        for (int j = 0; j < kernel.size; ++j) {
          const long py = oy * c.stride + i - anchor, px = ox * c.stride + j - anchor;
          if (py < 0 || py >= h || px < 0 || px >= w || kernel.at(i, j) == 0.0) continue;
          mask[static_cast<std::size_t>(py * w + px)] = true;
        }
      }
    }
  }
  return mask;
}

}  // namespace

std::string describe(const GradcheckCase& c) {
  return std::string(to_string(c.variant)) + " k=" + std::to_string(c.k) + " size=" +
         std::to_string(c.height) + "x" + std::to_string(c.width) + " stride=" + std::to_string(c.stride);
}

BoxParams random_smooth_box(int k, BoxVariant variant, BoxRng& rng, double margin) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> w(-1.5, 1.5);
  // Thetas move by at most the FD step, so this keeps them clear of
  // projection boundaries.
  const double theta_gap = 1e-3;
  for (;;) {
    BoxParams b;
    b.variant = variant;
    b.max_kernel = k;
    auto axis = [&](double& lo, double& hi) {
      lo = u(rng);
      hi = u(rng);
      if (lo > hi) std::swap(lo, hi);
    };
    axis(b.theta_xl, b.theta_xh);
    axis(b.theta_yl, b.theta_yh);
    std::uniform_real_distribution<double> sx(b.theta_xl, b.theta_xh), sy(b.theta_yl, b.theta_yh);
    if (splits_x(variant)) b.split_x = sx(rng);
    if (splits_y(variant)) b.split_y = sy(rng);
    if (variant != BoxVariant::Single) {
      for (std::size_t i = 0; i < sub_box_count(variant); ++i) b.weights[i] = w(rng);
    }
    b = project_params(b);

    bool ok = b.theta_xh - b.theta_xl > theta_gap && b.theta_yh - b.theta_yl > theta_gap;
    for (double t : {b.theta_xl, b.theta_xh, b.theta_yl, b.theta_yh}) ok = ok && 1.0 - std::abs(t) > theta_gap;
    if (splits_x(variant)) ok = ok && std::min(b.split_x - b.theta_xl, b.theta_xh - b.split_x) > theta_gap;
    if (splits_y(variant)) ok = ok && std::min(b.split_y - b.theta_yl, b.theta_yh - b.split_y) > theta_gap;
    if (!ok) continue;
    const CornerSamplePlan plan = compile_plan(b);
    if (clear_of_lattice(plan.x_sites, margin) && clear_of_lattice(plan.y_sites, margin)) return b;
  }
}

CaseResult check_case(const GradcheckCase& config, BoxRng& rng, std::size_t input_samples,
                      std::string_view fault) {
  CaseResult result{config, random_smooth_box(config.k, config.variant, rng), {}};
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FeatureMap x(1, config.height, config.width);
  for (double& v : x.data()) v = u(rng);
  const BoxConvLayer layer({result.box}, config.stride);
  const ForwardResult fwd = forward(layer, x);
  FeatureMap r(fwd.output.shape());
  for (double& v : r.data()) v = u(rng);
  const LayerGradients grads = backward(layer, fwd.saved, r);
  const BoxGradients& g = grads.grad_boxes.front();

  // Box parameters are differenced through the dense-kernel oracle. Edges that
  // only ever cover zero padding then leave the loss bit-identical, where the
  // SAT path would still wobble by roundoff from clamped taps.
  auto loss_with_box = [&](const BoxParams& b) {
    const std::vector<double> out =
        naive_conv<double>(x.plane(0), x.height(), x.width(), effective_kernel(b), config.stride);
    return dot(FeatureMap(r.shape(), out), r);
  };
  auto record = [&](std::string_view cat, std::size_t index, double analytic, double numeric) {
    if (!fault.empty() && cat == fault) analytic *= 1.01;
    const double err = relative_error(analytic, numeric);
    result.checks.push_back({cat, index, analytic, numeric, err, err < kGradTolerance});
  };
  auto param_fd = [&](auto&& field) {
    return finite_diff(
        [&](double v) {
          BoxParams b = result.box;
          field(b) = v;
          return loss_with_box(b);
        },
        field(result.box), kFiniteDiffStep);
  };

  for (std::size_t i = 0; i < 4; ++i) {
    record(kGradCategories[i], 0, g.theta[i], param_fd([i](BoxParams& b) -> double& { return theta_ref(b, i); }));
  }
  if (splits_x(config.variant)) {
    record("split_x", 0, g.split_x, param_fd([](BoxParams& b) -> double& { return b.split_x; }));
  }
  if (splits_y(config.variant)) {
    record("split_y", 0, g.split_y, param_fd([](BoxParams& b) -> double& { return b.split_y; }));
  }
  if (config.variant != BoxVariant::Single) {
    for (std::size_t i = 0; i < sub_box_count(config.variant); ++i) {
      record("weights", i, g.weights[i], param_fd([i](BoxParams& b) -> double& { return b.weights[i]; }));
    }
  }

  std::vector<std::size_t> inside, outside;
  {
    const std::vector<bool> mask = support_mask(result.box, config);
    for (std::size_t i = 0; i < mask.size(); ++i) (mask[i] ? inside : outside).push_back(i);
  }
  for (std::size_t s = 0; s < input_samples && !outside.empty(); ++s) {
    std::uniform_int_distribution<std::size_t> pick(0, outside.size() - 1);
    const std::size_t i = outside[pick(rng)];
    double analytic = grads.grad_input.data()[i];
    if (fault == "input_outside") analytic += 1e-9;
    const double err = std::abs(analytic);
    result.checks.push_back({"input_outside", i, analytic, 0.0, err, err <= kZeroGradTolerance});
  }
  for (std::size_t s = 0; s < input_samples && !inside.empty(); ++s) {
    std::uniform_int_distribution<std::size_t> pick(0, inside.size() - 1);
    const std::size_t i = inside[pick(rng)];
    FeatureMap xp = x;
    const double numeric = finite_diff(
        [&](double v) {
          xp.data()[i] = v;
          return dot(apply_box_conv(layer, xp), r);
        },
        x.data()[i], kFiniteDiffStep);
    record("input", i, grads.grad_input.data()[i], numeric);
  }
  return result;
}

void accumulate(GradcheckReport& report, const CaseResult& result) {
  ++report.cases;
  for (const GradCheck& c : result.checks) {
    CategoryStats& s = report.stats[category_index(c.category)];
    s.max_error = std::max(s.max_error, c.error);
    ++s.checks;
    if (!c.passed) {
      report.failures.push_back(std::string(c.category) + "[" + std::to_string(c.index) + "] " +
                                describe(result.config) + " box=" + format_box(result.box) +
                                " analytic=" + fmt("%.10e", c.analytic) + " numeric=" +
                                fmt("%.10e", c.numeric) + " error=" + fmt("%.3e", c.error));
    }
  }
}

GradcheckReport run_gradcheck(const GradcheckOptions& o) {
  GradcheckReport report;
  BoxRng rng(o.seed);
  for (BoxVariant v : {BoxVariant::Single, BoxVariant::SplitH, BoxVariant::SplitV, BoxVariant::Split4}) {
    for (int k : o.kernels) {
      check_kernel_size(k);
      for (std::size_t size : o.sizes) {
        for (int stride : o.strides) {
          for (std::size_t rep = 0; rep < o.repeats; ++rep) {
            accumulate(report, check_case({v, k, size, size, stride}, rng, 8, o.fault));
          }
        }
      }
    }
  }
  return report;
}

void print_report(std::ostream& out, const GradcheckOptions& o, const GradcheckReport& report) {
  out << "gradcheck seed=" << o.seed << " cases=" << report.cases << " h=" << fmt("%g", kFiniteDiffStep)
      << "\n";
  char line[128];
  std::snprintf(line, sizeof line, "%-14s %-8s %12s %10s %8s\n", "category", "metric", "max_error", "tolerance",
                "checks");
  out << line;
  for (std::size_t i = 0; i < kGradCategories.size(); ++i) {
    const CategoryStats& s = report.stats[i];
    const bool outside = kGradCategories[i] == "input_outside";
    std::snprintf(line, sizeof line, "%-14s %-8s %12.3e %10.0e %8zu\n", std::string(kGradCategories[i]).c_str(),
                  outside ? "abs" : "rel", s.max_error, outside ? kZeroGradTolerance : kGradTolerance, s.checks);
    out << line;
  }
  const std::size_t shown = std::min<std::size_t>(report.failures.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) out << "FAIL " << report.failures[i] << "\n";
  if (report.failures.size() > shown) {
    out << "... " << report.failures.size() - shown << " more failures\n";
  }
  out << (report.ok() ? "result: PASS" : "result: FAIL") << "\n";
}

}  // namespace satconv::tools
