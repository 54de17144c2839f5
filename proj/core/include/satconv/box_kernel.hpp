#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace satconv {

// SplitH cuts the box with a vertical line into left|right pieces (split
// coordinate on x). SplitV cuts it with a horizontal line into top/bottom
// pieces (split coordinate on y). Split4 does both.
enum class BoxVariant { Single, SplitH, SplitV, Split4 };

std::string_view to_string(BoxVariant v);
BoxVariant parse_variant(std::string_view name);

constexpr bool splits_x(BoxVariant v) {
  return v == BoxVariant::SplitH || v == BoxVariant::Split4;
}
constexpr bool splits_y(BoxVariant v) {
  return v == BoxVariant::SplitV || v == BoxVariant::Split4;
}
constexpr std::size_t sub_box_count(BoxVariant v) {
  return v == BoxVariant::Single ? 1 : (v == BoxVariant::Split4 ? 4 : 2);
}

/// One learnable box. Thetas live in [-1, 1] and map linearly onto centered
/// pixel offsets of a max_kernel x max_kernel window.
///
/// Sub-box weights are ordered left, right (SplitH); top, bottom (SplitV);
/// top-left, top-right, bottom-left, bottom-right (Split4). A Single box
/// always has weight 1.
struct BoxParams {
  BoxVariant variant = BoxVariant::Single;
  int max_kernel = 3;
  double theta_xl = 0.0;
  double theta_xh = 0.0;
  double theta_yl = 0.0;
  double theta_yh = 0.0;
  double split_x = 0.0;
  double split_y = 0.0;
  std::array<double, 4> weights{1.0, 1.0, 1.0, 1.0};

  friend bool operator==(const BoxParams&, const BoxParams&) = default;
};

using BoxRng = std::mt19937_64;

// Throws ContractViolation unless k is odd and >= 3.
void check_kernel_size(int k);

constexpr double pixel_scale(int k) { return (k - 1) / 2.0; }

/// theta * (k-1)/2. Throws ContractViolation for theta outside [-1, 1].
double theta_to_pixel(double theta, int k);

/// Clamp thetas to [-1, 1], swap lo/hi on an axis if they cross, then pull
/// split positions into (lo, hi) (midpoint when the interval is empty).
/// Idempotent.
BoxParams project_params(BoxParams p);

bool is_feasible(const BoxParams& p);

// Raw uniform draws on [-0.5, 0.5] before projection; exposed for
// distribution tests.
BoxParams draw_unprojected(int k, BoxVariant variant, BoxRng& rng);

BoxParams init_params(int k, BoxVariant variant, BoxRng& rng);

/// One lattice tap of a compiled plan: offsets are relative to the output
/// pixel's window center in SAT coordinates.
struct PlanTap {
  int dx = 0;
  int dy = 0;
  double weight = 0.0;
};

/// A continuous SAT sampling coordinate along one axis, split into the base
/// lattice index and the interpolation fraction in [0, 1].
struct AxisSite {
  enum class Role { Lo, Split, Hi };
  double coord = 0.0;
  int base = 0;
  double frac = 0.0;
  Role role = Role::Lo;
};

struct SubBox {
  std::size_t x0, x1, y0, y1;  // indices into x_sites / y_sites
};

/// Precomputed taps and signed interpolation weights for one box. Evaluating
/// sum(weight * SAT[center + offset]) gives the interpolated region sum.
struct CornerSamplePlan {
  BoxParams params;
  bool rounded = false;

  // Continuous pixel-space box edges (centered offsets). The box covers
  // SAT coordinates [x_lo, x_hi + 1] x [y_lo, y_hi + 1].
  double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;

  std::vector<AxisSite> x_sites;
  std::vector<AxisSite> y_sites;
  std::vector<SubBox> sub_boxes;
  std::vector<double> sub_weights;
  // Signed coefficient of each sample site, indexed [j * x_sites.size() + i].
  std::vector<double> site_coeff;

  // Four taps per site (site-major, y outer, x inner) or one per site when
  // rounded.
  std::vector<PlanTap> taps;

  std::size_t multadds_per_pixel() const { return taps.size(); }
  std::size_t site_count() const { return x_sites.size() * y_sites.size(); }
};

/// Throws ContractViolation if p is not feasible. With round_corners the
/// sample coordinates snap to the nearest lattice point and each site costs a
/// single tap.
CornerSamplePlan compile_plan(const BoxParams& p, bool round_corners = false);

// Text checkpoint format, one box per line:
//   <variant> <k> <xl> <xh> <yl> <yh> [split_x|split_y ...] [weights ...]
// Single has no trailing fields; SplitH: split_x w0 w1; SplitV: split_y w0 w1;
// Split4: split_x split_y w0 w1 w2 w3.
std::string format_box(const BoxParams& p);
BoxParams parse_box(std::string_view line);
void write_boxes(std::ostream& out, const std::vector<BoxParams>& boxes);
std::vector<BoxParams> read_boxes(std::istream& in);

}  // namespace satconv
