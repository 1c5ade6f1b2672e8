#pragma once

#include <array>
#include <vector>

#include "glyphdiff/core/tensor.hpp"

namespace gd {

struct Vec2 {
  double x = 0;
  double y = 0;
};

// Pixel-coordinate polygon: x grows right, y grows down. Closed implicitly
// (last vertex connects to first).
using Polygon = std::vector<Vec2>;

double polygon_area(const Polygon& p);  // shoelace, absolute value
void polygon_bounds(const Polygon& p, double& x0, double& y0, double& x1, double& y1);
bool polygon_is_simple(const Polygon& p);  // no self-intersections
bool point_in_polygon(const Polygon& p, double x, double y);  // even-odd rule
double point_polygon_distance(const Polygon& p, double x, double y);  // 0 inside

// Scanline even-odd fill into a [1,H,W] map (pixels set to `value` where the
// pixel center lies inside).
void fill_polygon(Tensor<float>& map, const Polygon& poly, float value,
                  double scale_x = 1.0, double scale_y = 1.0);

// Minimum-area enclosing rotated rectangle.
struct RotatedRect {
  double cx = 0, cy = 0;    // center
  double w = 0, h = 0;      // extents; w is the side nearest horizontal
  double angle = 0;         // radians, rotation of the w-axis, in (-pi/4, pi/4]
  std::array<Vec2, 4> corners() const;
};

RotatedRect min_area_rect(const Polygon& p);

// Affine matrix (row-major 2x3) mapping output canvas coords to source image
// coords for a crop that places `rect` axis-aligned with size (dst_w, dst_h)
// centered at (dst_cx, dst_cy).
std::array<float, 6> rect_to_canvas_affine(const RotatedRect& rect, double dst_w, double dst_h,
                                           double dst_cx, double dst_cy);

Polygon scale_polygon(const Polygon& p, double sx, double sy);

}  // namespace gd
