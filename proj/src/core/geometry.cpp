#include "glyphdiff/core/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gd {

double polygon_area(const Polygon& p) {
  double s = 0;
  size_t n = p.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = p[i];
    const Vec2& b = p[(i + 1) % n];
    s += a.x * b.y - b.x * a.y;
  }
  return std::abs(s) * 0.5;
}

void polygon_bounds(const Polygon& p, double& x0, double& y0, double& x1, double& y1) {
  x0 = y0 = std::numeric_limits<double>::max();
  x1 = y1 = std::numeric_limits<double>::lowest();
  for (const Vec2& v : p) {
    x0 = std::min(x0, v.x);
    y0 = std::min(y0, v.y);
    x1 = std::max(x1, v.x);
    y1 = std::max(y1, v.y);
  }
}

namespace {

int orientation(const Vec2& a, const Vec2& b, const Vec2& c) {
  double v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  if (v > 1e-12) return 1;
  if (v < -1e-12) return -1;
  return 0;
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x, b.x) - 1e-12 <= p.x && p.x <= std::max(a.x, b.x) + 1e-12 &&
         std::min(a.y, b.y) - 1e-12 <= p.y && p.y <= std::max(a.y, b.y) + 1e-12;
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  int o1 = orientation(p1, p2, q1);
  int o2 = orientation(p1, p2, q2);
  int o3 = orientation(q1, q2, p1);
  int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

}  // namespace

bool polygon_is_simple(const Polygon& p) {
  size_t n = p.size();
  if (n < 3) return false;
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a1 = p[i];
    const Vec2& a2 = p[(i + 1) % n];
    if (std::abs(a1.x - a2.x) < 1e-12 && std::abs(a1.y - a2.y) < 1e-12) return false;
    for (size_t j = i + 1; j < n; ++j) {
      // skip edges sharing a vertex
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      const Vec2& b1 = p[j];
      const Vec2& b2 = p[(j + 1) % n];
      if (segments_intersect(a1, a2, b1, b2)) return false;
    }
  }
  return true;
}

bool point_in_polygon(const Polygon& p, double x, double y) {
  bool in = false;
  size_t n = p.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = p[i];
    const Vec2& b = p[j];
    if ((a.y > y) != (b.y > y)) {
      double xi = a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (x < xi) in = !in;
    }
  }
  return in;
}

double point_polygon_distance(const Polygon& p, double x, double y) {
  if (point_in_polygon(p, x, y)) return 0.0;
  double best = std::numeric_limits<double>::max();
  size_t n = p.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = p[i];
    const Vec2& b = p[(i + 1) % n];
    double dx = b.x - a.x, dy = b.y - a.y;
    double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((x - a.x) * dx + (y - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    double px = a.x + t * dx - x, py = a.y + t * dy - y;
    best = std::min(best, std::sqrt(px * px + py * py));
  }
  return best;
}

void fill_polygon(Tensor<float>& map, const Polygon& poly, float value, double scale_x,
                  double scale_y) {
  check(map.ndim() == 3 && map.dim(0) == 1, "bad_shape", "fill_polygon map");
  int h = map.dim(1), w = map.dim(2);
  Polygon p = scale_polygon(poly, scale_x, scale_y);
  double y0, x0, y1, x1;
  polygon_bounds(p, x0, y0, x1, y1);
  int ry0 = std::max(0, int(std::floor(y0)));
  int ry1 = std::min(h - 1, int(std::ceil(y1)));
  size_t n = p.size();
  std::vector<double> xs;
  for (int y = ry0; y <= ry1; ++y) {
    double yc = y + 0.5;
    xs.clear();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
      const Vec2& a = p[i];
      const Vec2& b = p[j];
      if ((a.y > yc) != (b.y > yc))
        xs.push_back(a.x + (yc - a.y) / (b.y - a.y) * (b.x - a.x));
    }
    std::sort(xs.begin(), xs.end());
    for (size_t k = 0; k + 1 < xs.size(); k += 2) {
      int xa = std::max(0, int(std::ceil(xs[k] - 0.5)));
      int xb = std::min(w - 1, int(std::floor(xs[k + 1] - 0.5)));
      for (int x = xa; x <= xb; ++x) map.data()[y * w + x] = value;
    }
  }
}

namespace {

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec2& a, const Vec2& b) {
                          return std::abs(a.x - b.x) < 1e-12 && std::abs(a.y - b.y) < 1e-12;
                        }),
            pts.end());
  size_t n = pts.size();
  if (n < 3) return pts;
  std::vector<Vec2> hull(2 * n);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {
    while (k >= 2 && orientation(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  size_t lower = k + 1;
  for (size_t i = n - 1; i-- > 0;) {
    while (k >= lower && orientation(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace

RotatedRect min_area_rect(const Polygon& poly) {
  std::vector<Vec2> hull = convex_hull(poly);
  RotatedRect best;
  double best_area = std::numeric_limits<double>::max();
  size_t n = hull.size();
  if (n == 0) return best;
  if (n == 1) {
    best.cx = hull[0].x;
    best.cy = hull[0].y;
    return best;
  }
  size_t edges = (n == 2) ? 1 : n;
  for (size_t i = 0; i < edges; ++i) {
    const Vec2& a = hull[i];
    const Vec2& b = hull[(i + 1) % n];
    double dx = b.x - a.x, dy = b.y - a.y;
    double len = std::sqrt(dx * dx + dy * dy);
    if (len < 1e-12) continue;
    double ux = dx / len, uy = dy / len;     // edge direction
    double vx = -uy, vy = ux;                // normal
    double lo_u = 1e300, hi_u = -1e300, lo_v = 1e300, hi_v = -1e300;
    for (const Vec2& p : hull) {
      double pu = p.x * ux + p.y * uy;
      double pv = p.x * vx + p.y * vy;
      lo_u = std::min(lo_u, pu);
      hi_u = std::max(hi_u, pu);
      lo_v = std::min(lo_v, pv);
      hi_v = std::max(hi_v, pv);
    }
    double area = (hi_u - lo_u) * (hi_v - lo_v);
    if (area < best_area - 1e-12) {
      best_area = area;
      double cu = (lo_u + hi_u) * 0.5, cv = (lo_v + hi_v) * 0.5;
      best.cx = cu * ux + cv * vx;
      best.cy = cu * uy + cv * vy;
      best.w = hi_u - lo_u;
      best.h = hi_v - lo_v;
      best.angle = std::atan2(uy, ux);
    }
  }
  // normalize so the w-axis is the near-horizontal one
  const double qpi = std::atan(1.0);  // pi/4
  while (best.angle > qpi) {
    best.angle -= 2 * qpi;
    std::swap(best.w, best.h);
  }
  while (best.angle <= -qpi) {
    best.angle += 2 * qpi;
    std::swap(best.w, best.h);
  }
  return best;
}

std::array<Vec2, 4> RotatedRect::corners() const {
  double c = std::cos(angle), s = std::sin(angle);
  double hw = w * 0.5, hh = h * 0.5;
  auto pt = [&](double u, double v) {
    return Vec2{cx + u * c - v * s, cy + u * s + v * c};
  };
  return {pt(-hw, -hh), pt(hw, -hh), pt(hw, hh), pt(-hw, hh)};
}

std::array<float, 6> rect_to_canvas_affine(const RotatedRect& rect, double dst_w, double dst_h,
                                           double dst_cx, double dst_cy) {
  double c = std::cos(rect.angle), s = std::sin(rect.angle);
  double sw = rect.w / dst_w, sh = rect.h / dst_h;
  std::array<float, 6> m;
  m[0] = float(sw * c);
  m[1] = float(-sh * s);
  m[2] = float(rect.cx - dst_cx * sw * c + dst_cy * sh * s);
  m[3] = float(sw * s);
  m[4] = float(sh * c);
  m[5] = float(rect.cy - dst_cx * sw * s - dst_cy * sh * c);
  return m;
}

Polygon scale_polygon(const Polygon& p, double sx, double sy) {
  Polygon q = p;
  for (Vec2& v : q) {
    v.x *= sx;
    v.y *= sy;
  }
  return q;
}

}  // namespace gd
