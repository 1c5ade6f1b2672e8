#include <doctest.h>

#include <cmath>

#include "glyphdiff/core/geometry.hpp"
#include "glyphdiff/core/rng.hpp"

using namespace gd;

TEST_CASE("polygon area and simplicity") {
  Polygon rect = {{1, 1}, {5, 1}, {5, 4}, {1, 4}};
  CHECK(polygon_area(rect) == doctest::Approx(12.0));
  CHECK(polygon_is_simple(rect));

  Polygon bow = {{0, 0}, {4, 4}, {4, 0}, {0, 4}};  // self-intersecting
  CHECK_FALSE(polygon_is_simple(bow));

  Polygon degenerate = {{0, 0}, {0, 0}, {1, 1}};
  CHECK_FALSE(polygon_is_simple(degenerate));
}

TEST_CASE("point in polygon even-odd") {
  Polygon tri = {{0, 0}, {10, 0}, {0, 10}};
  CHECK(point_in_polygon(tri, 1, 1));
  CHECK_FALSE(point_in_polygon(tri, 8, 8));
  CHECK(point_polygon_distance(tri, 1, 1) == 0.0);
  CHECK(point_polygon_distance(tri, -3, 0) == doctest::Approx(3.0));
}

TEST_CASE("scanline fill area approximates polygon area") {
  // disjoint polygons: lit pixels = a1 + a2 within rasterization boundary
  Polygon a = {{2, 2}, {12, 2}, {12, 9}, {2, 9}};              // 70 px
  Polygon b = {{20, 12}, {30, 12}, {25, 22}};                  // 50 px triangle
  Tensor<float> map({1, 32, 40});
  fill_polygon(map, a, 1.0f);
  fill_polygon(map, b, 1.0f);
  double lit = map.array().sum();
  double expect = polygon_area(a) + polygon_area(b);
  double perimeter = (10 + 7) * 2 + (10 + std::sqrt(125.0) * 2);
  CHECK(std::abs(lit - expect) <= perimeter);

  // full-image rectangle -> all ones
  Tensor<float> full({1, 8, 8});
  fill_polygon(full, {{0, 0}, {8, 0}, {8, 8}, {0, 8}}, 1.0f);
  CHECK(full.array().minCoeff() == 1.0f);
}

TEST_CASE("min area rect recovers rotated rectangles") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    double cx = rng.uniform(10, 20), cy = rng.uniform(10, 20);
    double w = rng.uniform(6, 14), h = rng.uniform(2, 5);
    double ang = rng.uniform(-0.6, 0.6);
    double c = std::cos(ang), s = std::sin(ang);
    Polygon p;
    for (auto [u, v] : {std::pair{-w / 2, -h / 2}, {w / 2, -h / 2}, {w / 2, h / 2},
                        {-w / 2, h / 2}})
      p.push_back({cx + u * c - v * s, cy + u * s + v * c});
    RotatedRect r = min_area_rect(p);
    CHECK(r.w * r.h == doctest::Approx(w * h).epsilon(1e-6));
    CHECK(r.cx == doctest::Approx(cx).epsilon(1e-6));
    CHECK(r.cy == doctest::Approx(cy).epsilon(1e-6));
    // w axis is the near-horizontal side
    CHECK(std::abs(r.angle) <= std::atan(1.0) + 1e-9);
  }
}

TEST_CASE("rect_to_canvas_affine maps canvas corners onto rect corners") {
  RotatedRect r;
  r.cx = 12;
  r.cy = 9;
  r.w = 8;
  r.h = 4;
  r.angle = 0.3;
  auto m = rect_to_canvas_affine(r, 16, 8, 8, 4);
  auto apply = [&](double u, double v) {
    return Vec2{m[0] * u + m[1] * v + m[2], m[3] * u + m[4] * v + m[5]};
  };
  Vec2 center = apply(8, 4);
  CHECK(center.x == doctest::Approx(12.0));
  CHECK(center.y == doctest::Approx(9.0));
  auto corners = r.corners();
  Vec2 tl = apply(0, 0);
  CHECK(tl.x == doctest::Approx(corners[0].x));
  CHECK(tl.y == doctest::Approx(corners[0].y));
}
