#include "satconv/box_kernel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "satconv/errors.hpp"

namespace satconv {

std::string_view to_string(BoxVariant v) {
  switch (v) {
    case BoxVariant::Single: return "single";
    case BoxVariant::SplitH: return "splith";
    case BoxVariant::SplitV: return "splitv";
    case BoxVariant::Split4: return "split4";
  }
  return "?";
}

BoxVariant parse_variant(std::string_view name) {
  for (auto v : {BoxVariant::Single, BoxVariant::SplitH, BoxVariant::SplitV,
                 BoxVariant::Split4}) {
    if (name == to_string(v)) return v;
  }
  throw ParseError("unknown box variant '" + std::string(name) + "'");
}

void check_kernel_size(int k) {
  if (k < 3 || k % 2 == 0) {
    throw ContractViolation("box kernel size must be odd and >= 3, got " +
                            std::to_string(k));
  }
}

double theta_to_pixel(double theta, int k) {
  check_kernel_size(k);
  if (!(theta >= -1.0 && theta <= 1.0)) {
    throw ContractViolation("theta " + std::to_string(theta) + " outside [-1, 1]");
  }
  return theta * pixel_scale(k);
}

namespace {

constexpr double kSplitMargin = 1e-9;

double place_split(double s, double lo, double hi) {
  if (hi - lo <= 2 * kSplitMargin) return 0.5 * (lo + hi);
  return std::clamp(s, lo + kSplitMargin, hi - kSplitMargin);
}

}  // namespace

BoxParams project_params(BoxParams p) {
  const auto clip = [](double t) { return std::isnan(t) ? 0.0 : std::clamp(t, -1.0, 1.0); };
  p.theta_xl = clip(p.theta_xl);
  p.theta_xh = clip(p.theta_xh);
  p.theta_yl = clip(p.theta_yl);
  p.theta_yh = clip(p.theta_yh);
  if (p.theta_xl > p.theta_xh) std::swap(p.theta_xl, p.theta_xh);
  if (p.theta_yl > p.theta_yh) std::swap(p.theta_yl, p.theta_yh);
  if (splits_x(p.variant)) p.split_x = place_split(clip(p.split_x), p.theta_xl, p.theta_xh);
  if (splits_y(p.variant)) p.split_y = place_split(clip(p.split_y), p.theta_yl, p.theta_yh);
  // Unused fields take canonical values so equal boxes compare equal.
  if (!splits_x(p.variant)) p.split_x = 0.0;
  if (!splits_y(p.variant)) p.split_y = 0.0;
  for (std::size_t b = p.variant == BoxVariant::Single ? 0 : sub_box_count(p.variant); b < 4; ++b) {
    p.weights[b] = 1.0;
  }
  return p;
}

bool is_feasible(const BoxParams& p) {
  if (p.max_kernel < 3 || p.max_kernel % 2 == 0) return false;
  const auto in_range = [](double t) { return t >= -1.0 && t <= 1.0; };
  if (!in_range(p.theta_xl) || !in_range(p.theta_xh) || !in_range(p.theta_yl) ||
      !in_range(p.theta_yh)) {
    return false;
  }
  if (p.theta_xl > p.theta_xh || p.theta_yl > p.theta_yh) return false;
  if (splits_x(p.variant) && !(p.split_x >= p.theta_xl && p.split_x <= p.theta_xh)) return false;
  if (splits_y(p.variant) && !(p.split_y >= p.theta_yl && p.split_y <= p.theta_yh)) return false;
  return true;
}

BoxParams draw_unprojected(int k, BoxVariant variant, BoxRng& rng) {
  check_kernel_size(k);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  BoxParams p;
  p.variant = variant;
  p.max_kernel = k;
  p.theta_xl = u(rng);
  p.theta_xh = u(rng);
  p.theta_yl = u(rng);
  p.theta_yh = u(rng);
  return p;
}

BoxParams init_params(int k, BoxVariant variant, BoxRng& rng) {
  BoxParams p = project_params(draw_unprojected(k, variant, rng));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (splits_x(variant)) p.split_x = p.theta_xl + u(rng) * (p.theta_xh - p.theta_xl);
  if (splits_y(variant)) p.split_y = p.theta_yl + u(rng) * (p.theta_yh - p.theta_yl);
  return project_params(p);
}

namespace {

// Lattice cell for a continuous SAT coordinate. At the top of the window the
// cell to the left is used (frac = 1) so taps stay inside the window + 1.
AxisSite make_site(double coord, AxisSite::Role role, int upper, bool rounded) {
  AxisSite s;
  s.role = role;
  s.coord = rounded ? std::round(coord) : coord;
  double base = std::floor(s.coord);
  if (!rounded && base >= upper) base = upper - 1;
  s.base = static_cast<int>(base);
  s.frac = s.coord - base;
  return s;
}

std::vector<AxisSite> axis_sites(double lo_px, double split_coord, double hi_px,
                                 bool has_split, int upper, bool rounded) {
  std::vector<AxisSite> sites;
  // The hi edge sits one lattice unit past the last covered pixel.
  if (rounded) {
    sites.push_back(make_site(std::round(lo_px), AxisSite::Role::Lo, upper, true));
    if (has_split) sites.push_back(make_site(split_coord, AxisSite::Role::Split, upper, true));
    sites.push_back(make_site(std::round(hi_px) + 1.0, AxisSite::Role::Hi, upper, true));
  } else {
    sites.push_back(make_site(lo_px, AxisSite::Role::Lo, upper, false));
    if (has_split) sites.push_back(make_site(split_coord, AxisSite::Role::Split, upper, false));
    sites.push_back(make_site(hi_px + 1.0, AxisSite::Role::Hi, upper, false));
  }
  return sites;
}

}  // namespace

CornerSamplePlan compile_plan(const BoxParams& p, bool round_corners) {
  if (!is_feasible(p)) {
    throw ContractViolation("compile_plan: box parameters are not feasible: " +
                            format_box(p));
  }
  const int k = p.max_kernel;
  const double scale = pixel_scale(k);
  const int upper = (k - 1) / 2 + 1;

  CornerSamplePlan plan;
  plan.params = p;
  plan.rounded = round_corners;
  plan.x_lo = p.theta_xl * scale;
  plan.x_hi = p.theta_xh * scale;
  plan.y_lo = p.theta_yl * scale;
  plan.y_hi = p.theta_yh * scale;
  // A split line at theta s sits at SAT coordinate s*scale + 0.5, i.e. the
  // midpoint theta lands on the middle of [lo, hi + 1].
  plan.x_sites = axis_sites(plan.x_lo, p.split_x * scale + 0.5, plan.x_hi,
                            splits_x(p.variant), upper, round_corners);
  plan.y_sites = axis_sites(plan.y_lo, p.split_y * scale + 0.5, plan.y_hi,
                            splits_y(p.variant), upper, round_corners);

  const std::size_t nx = plan.x_sites.size();
  const std::size_t ny = plan.y_sites.size();
  for (std::size_t j = 0; j + 1 < ny; ++j) {
    for (std::size_t i = 0; i + 1 < nx; ++i) plan.sub_boxes.push_back({i, i + 1, j, j + 1});
  }
  if (p.variant == BoxVariant::Single) {
    plan.sub_weights = {1.0};
  } else {
    plan.sub_weights.assign(p.weights.begin(), p.weights.begin() + plan.sub_boxes.size());
  }

  plan.site_coeff.assign(nx * ny, 0.0);
  for (std::size_t b = 0; b < plan.sub_boxes.size(); ++b) {
    const SubBox& s = plan.sub_boxes[b];
    const double w = plan.sub_weights[b];
    plan.site_coeff[s.y1 * nx + s.x1] += w;
    plan.site_coeff[s.y0 * nx + s.x0] += w;
    plan.site_coeff[s.y1 * nx + s.x0] -= w;
    plan.site_coeff[s.y0 * nx + s.x1] -= w;
  }

  for (std::size_t j = 0; j < ny; ++j) {
    const AxisSite& sy = plan.y_sites[j];
    for (std::size_t i = 0; i < nx; ++i) {
      const AxisSite& sx = plan.x_sites[i];
      const double c = plan.site_coeff[j * nx + i];
      if (round_corners) {
        plan.taps.push_back({sx.base, sy.base, c});
        continue;
      }
      const double a = sx.frac, b = sy.frac;
      plan.taps.push_back({sx.base, sy.base, c * (1 - a) * (1 - b)});
      plan.taps.push_back({sx.base + 1, sy.base, c * a * (1 - b)});
      plan.taps.push_back({sx.base, sy.base + 1, c * (1 - a) * b});
      plan.taps.push_back({sx.base + 1, sy.base + 1, c * a * b});
    }
  }
  return plan;
}

std::string format_box(const BoxParams& p) {
  std::string out;
  char buf[64];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), " %.17g", v);
    out += buf;
  };
  out += to_string(p.variant);
  out += " " + std::to_string(p.max_kernel);
  num(p.theta_xl);
  num(p.theta_xh);
  num(p.theta_yl);
  num(p.theta_yh);
  if (splits_x(p.variant)) num(p.split_x);
  if (splits_y(p.variant)) num(p.split_y);
  if (p.variant != BoxVariant::Single) {
    for (std::size_t b = 0; b < sub_box_count(p.variant); ++b) num(p.weights[b]);
  }
  return out;
}

BoxParams parse_box(std::string_view line) {
  std::istringstream in{std::string(line)};
  std::string variant;
  BoxParams p;
  if (!(in >> variant)) throw ParseError("empty box line");
  p.variant = parse_variant(variant);
  std::vector<double> values;
  if (!(in >> p.max_kernel)) throw ParseError("box line missing kernel size: " + std::string(line));
  std::string tok;
  while (in >> tok) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
      throw ParseError("bad number '" + tok + "' in box line");
    }
    values.push_back(v);
  }
  const std::size_t splits = (splits_x(p.variant) ? 1 : 0) + (splits_y(p.variant) ? 1 : 0);
  const std::size_t weights = p.variant == BoxVariant::Single ? 0 : sub_box_count(p.variant);
  if (values.size() != 4 + splits + weights) {
    throw ParseError("box line for " + variant + " needs " +
                     std::to_string(4 + splits + weights) + " numbers, got " +
                     std::to_string(values.size()));
  }
  try {
    check_kernel_size(p.max_kernel);
  } catch (const ContractViolation& e) {
    throw ParseError(e.what());
  }
  std::size_t i = 0;
  p.theta_xl = values[i++];
  p.theta_xh = values[i++];
  p.theta_yl = values[i++];
  p.theta_yh = values[i++];
  if (splits_x(p.variant)) p.split_x = values[i++];
  if (splits_y(p.variant)) p.split_y = values[i++];
  for (std::size_t b = 0; b < weights; ++b) p.weights[b] = values[i++];
  return p;
}

void write_boxes(std::ostream& out, const std::vector<BoxParams>& boxes) {
  for (const auto& b : boxes) out << format_box(b) << '\n';
}

std::vector<BoxParams> read_boxes(std::istream& in) {
  std::vector<BoxParams> boxes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      boxes.push_back(parse_box(line));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return boxes;
}

}  // namespace satconv
