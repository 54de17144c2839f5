#include "satconv/box_conv.hpp"

#include <algorithm>
#include <string>

#include "parallel.hpp"
#include "satconv/errors.hpp"

namespace satconv {

BoxConvLayer::BoxConvLayer(std::vector<BoxParams> boxes, int stride, bool round_corners)
    : stride_(stride), round_corners_(round_corners) {
  if (stride < 1) throw ContractViolation("box conv stride must be >= 1");
  set_boxes(std::move(boxes));
}

BoxConvLayer BoxConvLayer::random(std::size_t channels, int k, BoxVariant variant,
                                  BoxRng& rng, int stride) {
  std::vector<BoxParams> boxes;
  boxes.reserve(channels);
  for (std::size_t c = 0; c < channels; ++c) boxes.push_back(init_params(k, variant, rng));
  return BoxConvLayer(std::move(boxes), stride);
}

void BoxConvLayer::set_boxes(std::vector<BoxParams> boxes) {
  if (boxes.empty()) throw DimensionError("box conv layer needs at least one channel");
  const int k = boxes.front().max_kernel;
  for (const auto& b : boxes) {
    if (b.max_kernel != k) {
      throw ContractViolation("all boxes in a layer must share one kernel size");
    }
  }
  boxes_ = std::move(boxes);
  rebuild();
}

void BoxConvLayer::set_round_corners(bool on) {
  round_corners_ = on;
  rebuild();
}

void BoxConvLayer::rebuild() {
  plans_.clear();
  plans_.reserve(boxes_.size());
  for (const auto& b : boxes_) plans_.push_back(compile_plan(b, round_corners_));
}

namespace {

void check_channels(const BoxConvLayer& layer, const Shape& s) {
  if (s.channels != layer.channels()) {
    throw DimensionError("box conv: input has " + std::to_string(s.channels) +
                         " channels, layer has " + std::to_string(layer.channels()));
  }
}

// Output pixel (oy, ox) sums weight * SAT[clamp(oy*s + dy), clamp(ox*s + dx)]
// over the plan's taps, in tap order.
template <typename T>
void apply_plan(const SummedAreaTable& sat, const CornerSamplePlan& plan, int stride,
                std::size_t out_h, std::size_t out_w, T* out) {
  const long H = static_cast<long>(sat.height());
  const long W = static_cast<long>(sat.width());
  const long s = stride;
  const long ow = static_cast<long>(out_w);
  // Outputs whose box starts at or past the right/bottom edge see only zero
  // padding. Their clamped taps cancel only up to roundoff, so write exact
  // zeros there instead.
  double x_min = plan.x_sites.front().coord, y_min = plan.y_sites.front().coord;
  for (const AxisSite& a : plan.x_sites) x_min = std::min(x_min, a.coord);
  for (const AxisSite& a : plan.y_sites) y_min = std::min(y_min, a.coord);
  long live_w = 0;
  while (live_w < ow && static_cast<double>(live_w * s) + x_min < static_cast<double>(W)) ++live_w;
  std::vector<double> acc(out_w);
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    if (static_cast<double>(static_cast<long>(oy) * s) + y_min >= static_cast<double>(H)) {
      std::fill(out + oy * out_w, out + (oy + 1) * out_w, T{});
      continue;
    }
    std::fill(acc.begin(), acc.end(), 0.0);
    for (const PlanTap& t : plan.taps) {
      const long row = std::clamp(static_cast<long>(oy) * s + t.dy, 0L, H);
      const double* r = sat.row(static_cast<std::size_t>(row));
      const double w = t.weight;
      // Column ox*s + dx is in [0, W] for ox in [lo, hi).
      const long lo = std::clamp(t.dx >= 0 ? 0L : (-t.dx + s - 1) / s, 0L, ow);
      const long hi = std::clamp(W - t.dx < 0 ? 0L : (W - t.dx) / s + 1, lo, ow);
      const double left = r[0];
      const double right = r[W];
      for (long ox = 0; ox < lo; ++ox) acc[ox] += w * left;
      if (s == 1) {
        const double* rr = r + t.dx;
        for (long ox = lo; ox < hi; ++ox) acc[ox] += w * rr[ox];
      } else {
        for (long ox = lo; ox < hi; ++ox) acc[ox] += w * r[ox * s + t.dx];
      }
      for (long ox = hi; ox < ow; ++ox) acc[ox] += w * right;
    }
    std::fill(acc.begin() + live_w, acc.end(), 0.0);
    T* dst = out + oy * out_w;
    for (std::size_t ox = 0; ox < out_w; ++ox) dst[ox] = static_cast<T>(acc[ox]);
  }
}

}  // namespace

ForwardResult forward(const BoxConvLayer& layer, const FeatureMap& input,
                      const ExecOptions& exec) {
  check_channels(layer, input.shape());
  const int s = layer.stride();
  ForwardResult r{FeatureMap(input.channels(), output_extent(input.height(), s),
                             output_extent(input.width(), s)),
                  ForwardState{}};
  ForwardState& st = r.saved;
  st.input_shape = input.shape();
  st.out_height = r.output.height();
  st.out_width = r.output.width();
  st.stride = s;
  st.plans = layer.plans();
  st.sats.reserve(input.channels());
  for (std::size_t c = 0; c < input.channels(); ++c) {
    st.sats.emplace_back(input.height(), input.width());
  }
  detail::parallel_for(input.channels(), exec.threads, [&](std::size_t c) {
    st.sats[c] = build_sat(input, c);
    apply_plan(st.sats[c], st.plans[c], s, st.out_height, st.out_width,
               r.output.plane(c).data());
  });
  return r;
}

template <typename T>
BasicFeatureMap<T> apply_box_conv(const BoxConvLayer& layer, const BasicFeatureMap<T>& input,
                                  const ExecOptions& exec) {
  check_channels(layer, input.shape());
  const int s = layer.stride();
  BasicFeatureMap<T> out(input.channels(), output_extent(input.height(), s),
                         output_extent(input.width(), s));
  detail::parallel_for(input.channels(), exec.threads, [&](std::size_t c) {
    const SummedAreaTable sat = build_sat(input, c);
    apply_plan(sat, layer.plans()[c], s, out.height(), out.width(), out.plane(c).data());
  });
  return out;
}

template FeatureMap apply_box_conv(const BoxConvLayer&, const FeatureMap&, const ExecOptions&);
template FeatureMapF apply_box_conv(const BoxConvLayer&, const FeatureMapF&, const ExecOptions&);

namespace {

struct ChannelGrad {
  std::vector<double> grad_input;
  BoxGradients box;
};

ChannelGrad backward_channel(const SummedAreaTable& sat, const CornerSamplePlan& plan,
                             int stride, std::size_t out_h, std::size_t out_w,
                             std::span<const double> grad_out) {
  const long H = static_cast<long>(sat.height());
  const long W = static_cast<long>(sat.width());
  const std::size_t stride_sat = sat.row_stride();
  const auto crow = [H](long v) { return static_cast<std::size_t>(std::clamp(v, 0L, H)); };
  const auto ccol = [W](long v) { return static_cast<std::size_t>(std::clamp(v, 0L, W)); };

  std::vector<double> grad_sat((sat.height() + 1) * stride_sat, 0.0);
  const std::size_t nx = plan.x_sites.size();
  const std::size_t ny = plan.y_sites.size();
  std::vector<double> gx(nx, 0.0), gy(ny, 0.0), gw(plan.sub_boxes.size(), 0.0);
  std::vector<double> site_value(nx * ny);
  const bool learn = !plan.rounded;

  for (std::size_t oy = 0; oy < out_h; ++oy) {
    const long cy = static_cast<long>(oy) * stride;
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const double g = grad_out[oy * out_w + ox];
      if (g == 0.0) continue;
      const long cx = static_cast<long>(ox) * stride;

      for (const PlanTap& t : plan.taps) {
        grad_sat[crow(cy + t.dy) * stride_sat + ccol(cx + t.dx)] += g * t.weight;
      }
      if (!learn) continue;

      for (std::size_t j = 0; j < ny; ++j) {
        const AxisSite& sy = plan.y_sites[j];
        const double* r0 = sat.row(crow(cy + sy.base));
        const double* r1 = sat.row(crow(cy + sy.base + 1));
        const double b = sy.frac;
        for (std::size_t i = 0; i < nx; ++i) {
          const AxisSite& sx = plan.x_sites[i];
          const std::size_t c0 = ccol(cx + sx.base), c1 = ccol(cx + sx.base + 1);
          const double a = sx.frac;
          const double s00 = r0[c0], s10 = r0[c1], s01 = r1[c0], s11 = r1[c1];
          const double coeff = plan.site_coeff[j * nx + i];
          const double d_dx = (1 - b) * (s10 - s00) + b * (s11 - s01);
          const double d_dy = (1 - a) * (s01 - s00) + a * (s11 - s10);
          gx[i] += g * coeff * d_dx;
          gy[j] += g * coeff * d_dy;
          site_value[j * nx + i] =
              (1 - a) * (1 - b) * s00 + a * (1 - b) * s10 + (1 - a) * b * s01 + a * b * s11;
        }
      }
      for (std::size_t q = 0; q < plan.sub_boxes.size(); ++q) {
        const SubBox& sb = plan.sub_boxes[q];
        gw[q] += g * (site_value[sb.y1 * nx + sb.x1] + site_value[sb.y0 * nx + sb.x0] -
                      site_value[sb.y1 * nx + sb.x0] - site_value[sb.y0 * nx + sb.x1]);
      }
    }
  }

  ChannelGrad out;
  out.grad_input = sat_backward(grad_sat, sat.height(), sat.width());
  if (!learn) return out;

  // Every sample coordinate is an affine function of one theta with slope
  // (k-1)/2.
  const double scale = pixel_scale(plan.params.max_kernel);
  const auto route = [&](const std::vector<AxisSite>& sites, const std::vector<double>& g,
                         double& lo, double& split, double& hi) {
    for (std::size_t i = 0; i < sites.size(); ++i) {
      switch (sites[i].role) {
        case AxisSite::Role::Lo: lo += g[i] * scale; break;
        case AxisSite::Role::Split: split += g[i] * scale; break;
        case AxisSite::Role::Hi: hi += g[i] * scale; break;
      }
    }
  };
  route(plan.x_sites, gx, out.box.theta[0], out.box.split_x, out.box.theta[1]);
  route(plan.y_sites, gy, out.box.theta[2], out.box.split_y, out.box.theta[3]);
  if (plan.params.variant != BoxVariant::Single) {
    for (std::size_t q = 0; q < gw.size(); ++q) out.box.weights[q] = gw[q];
  }
  return out;
}

}  // namespace

LayerGradients backward(const BoxConvLayer& layer, const ForwardState& saved,
                        const FeatureMap& grad_output, const ExecOptions& exec) {
  check_channels(layer, saved.input_shape);
  if (saved.sats.size() != saved.input_shape.channels ||
      grad_output.channels() != saved.input_shape.channels ||
      grad_output.height() != saved.out_height || grad_output.width() != saved.out_width) {
    throw DimensionError("box conv backward: grad_output " + to_string(grad_output.shape()) +
                         " does not match the saved forward pass");
  }
  LayerGradients grads{FeatureMap(saved.input_shape),
                       std::vector<BoxGradients>(saved.input_shape.channels)};
  detail::parallel_for(saved.input_shape.channels, exec.threads, [&](std::size_t c) {
    ChannelGrad cg = backward_channel(saved.sats[c], saved.plans[c], saved.stride,
                                      saved.out_height, saved.out_width,
                                      grad_output.plane(c));
    auto dst = grads.grad_input.plane(c);
    std::copy(cg.grad_input.begin(), cg.grad_input.end(), dst.begin());
    grads.grad_boxes[c] = cg.box;
  });
  return grads;
}

std::uint64_t multadd_count(const BoxConvLayer& layer, const Shape& input_shape) {
  const std::uint64_t pixels =
      static_cast<std::uint64_t>(output_extent(input_shape.height, layer.stride())) *
      output_extent(input_shape.width, layer.stride());
  std::uint64_t taps = 0;
  for (const auto& p : layer.plans()) taps += p.multadds_per_pixel();
  return pixels * taps;
}

}  // namespace satconv
