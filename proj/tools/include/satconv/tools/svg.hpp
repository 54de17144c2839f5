#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "satconv/box_kernel.hpp"

namespace satconv::tools {

struct SvgLayout {
  double tile = 96.0;
  double gap = 12.0;
  std::size_t columns = 8;
};

// Box extent inside its window tile: the window spans [0, tile] on both axes.
struct TileRect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
};

TileRect box_rect(const BoxParams& box, double tile);
// Split line positions in tile coordinates (x for vertical, y for horizontal).
double split_x_position(const BoxParams& box, double tile);
double split_y_position(const BoxParams& box, double tile);

/// One tile per box: the k x k window outline, the box rectangle and any
/// split lines. Output depends only on the boxes and the layout.
std::string render_boxes_svg(const std::vector<BoxParams>& boxes, const SvgLayout& layout = {});

}  // namespace satconv::tools
