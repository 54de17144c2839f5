#include "satconv/tools/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <string>

namespace satconv::tools {

namespace {

// Continuous SAT coordinate (centered) to tile units.
double to_tile(double coord, int k, double tile) {
  return (coord + pixel_scale(k)) * tile / static_cast<double>(k);
}

void appendf(std::string& out, const char* spec, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, spec, args...);
  out += buf;
}

}  // namespace

TileRect box_rect(const BoxParams& b, double tile) {
  const int k = b.max_kernel;
  return {to_tile(theta_to_pixel(b.theta_xl, k), k, tile), to_tile(theta_to_pixel(b.theta_yl, k), k, tile),
          to_tile(theta_to_pixel(b.theta_xh, k) + 1.0, k, tile),
          to_tile(theta_to_pixel(b.theta_yh, k) + 1.0, k, tile)};
}

// A split theta sits half a pixel into the cell it names.
double split_x_position(const BoxParams& b, double tile) {
  return to_tile(theta_to_pixel(b.split_x, b.max_kernel) + 0.5, b.max_kernel, tile);
}

double split_y_position(const BoxParams& b, double tile) {
  return to_tile(theta_to_pixel(b.split_y, b.max_kernel) + 0.5, b.max_kernel, tile);
}

std::string render_boxes_svg(const std::vector<BoxParams>& boxes, const SvgLayout& layout) {
  const std::size_t cols = std::max<std::size_t>(1, std::min(layout.columns, std::max<std::size_t>(boxes.size(), 1)));
  const std::size_t rows = (boxes.size() + cols - 1) / cols;
  const double label = 14.0;
  const double cell_w = layout.tile + layout.gap;
  const double cell_h = layout.tile + layout.gap + label;
  const double width = layout.gap + static_cast<double>(cols) * cell_w;
  const double height = layout.gap + static_cast<double>(std::max<std::size_t>(rows, 1)) * cell_h;

  std::string out;
  appendf(out,
          "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.3f\" height=\"%.3f\" "
          "viewBox=\"0 0 %.3f %.3f\">\n",
          width, height, width, height);
  appendf(out, "<rect x=\"0\" y=\"0\" width=\"%.3f\" height=\"%.3f\" fill=\"#ffffff\"/>\n", width, height);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const BoxParams& b = boxes[i];
    const double ox = layout.gap + static_cast<double>(i % cols) * cell_w;
    const double oy = layout.gap + static_cast<double>(i / cols) * cell_h;
    const double t = layout.tile;
    appendf(out, "<g id=\"box%zu\" transform=\"translate(%.3f,%.3f)\">\n", i, ox, oy + label);
    appendf(out, "<text x=\"0\" y=\"-3\" font-family=\"monospace\" font-size=\"10\">%zu %s k=%d</text>\n", i,
            std::string(to_string(b.variant)).c_str(), b.max_kernel);
    appendf(out,
            "<rect class=\"window\" x=\"0.000\" y=\"0.000\" width=\"%.3f\" height=\"%.3f\" fill=\"none\" "
            "stroke=\"#999999\"/>\n",
            t, t);
    const TileRect r = box_rect(b, t);
    appendf(out,
            "<rect class=\"box\" x=\"%.3f\" y=\"%.3f\" width=\"%.3f\" height=\"%.3f\" fill=\"#3b7dd8\" "
            "fill-opacity=\"0.45\" stroke=\"#1d3f73\"/>\n",
            r.x0, r.y0, r.x1 - r.x0, r.y1 - r.y0);
    if (splits_x(b.variant)) {
      const double x = split_x_position(b, t);
      appendf(out, "<line class=\"split\" x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\" stroke=\"#c0392b\"/>\n",
              x, r.y0, x, r.y1);
    }
    if (splits_y(b.variant)) {
      const double y = split_y_position(b, t);
      appendf(out, "<line class=\"split\" x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\" stroke=\"#c0392b\"/>\n",
              r.x0, y, r.x1, y);
    }
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace satconv::tools
