#include "glyphdiff/font/stroke_font.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "glyphdiff/core/error.hpp"

namespace gd {

StrokeFont StrokeFont::load(const std::string& path_or_builtin) {
  if (path_or_builtin == "builtin:sans") return builtin_sans_font();
  std::ifstream is(path_or_builtin);
  check(is.good(), "font_missing", "font file not found: " + path_or_builtin);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw Error("font_invalid", "font file parse error: " + std::string(e.what()));
  }
  StrokeFont f;
  f.name_ = j.value("name", "custom");
  f.stroke_width_ = j.value("stroke_width", 0.095);
  check(j.contains("glyphs") && j["glyphs"].is_object(), "font_invalid",
        "font file lacks glyphs table");
  for (auto& [key, gj] : j["glyphs"].items()) {
    check(key.size() == 1, "font_invalid", "glyph keys must be single characters");
    Glyph g;
    g.advance = gj.value("advance", 0.78);
    for (const auto& stroke : gj.value("strokes", nlohmann::json::array())) {
      std::vector<Vec2> pts;
      for (const auto& p : stroke) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      g.strokes.push_back(std::move(pts));
    }
    f.glyphs_[key[0]] = std::move(g);
  }
  return f;
}

std::string StrokeFont::to_json() const {
  nlohmann::json j;
  j["name"] = name_;
  j["stroke_width"] = stroke_width_;
  nlohmann::json glyphs = nlohmann::json::object();
  for (const auto& [c, g] : glyphs_) {
    nlohmann::json gj;
    gj["advance"] = g.advance;
    nlohmann::json strokes = nlohmann::json::array();
    for (const auto& stroke : g.strokes) {
      nlohmann::json s = nlohmann::json::array();
      for (const Vec2& p : stroke) s.push_back({p.x, p.y});
      strokes.push_back(s);
    }
    gj["strokes"] = strokes;
    glyphs[std::string(1, c)] = gj;
  }
  j["glyphs"] = glyphs;
  return j.dump(1);
}

double StrokeFont::text_width(const std::string& text) const {
  double w = 0;
  for (char c : text) {
    auto it = glyphs_.find(c);
    w += (it != glyphs_.end()) ? it->second.advance : 0.78;
  }
  return w;
}

namespace {

const StrokeFont::Glyph& fallback_box() {
  static StrokeFont::Glyph g = {
      {{{0.05, 0.05}, {0.55, 0.05}, {0.55, 0.95}, {0.05, 0.95}, {0.05, 0.05}}}, 0.78};
  return g;
}

}  // namespace

void StrokeFont::draw_glyph(Tensor<float>& canvas, const Glyph& g, double x, double y,
                            double size_px, float ink) const {
  int h = canvas.dim(1), w = canvas.dim(2);
  double r = std::max(stroke_width_ * size_px * 0.5, 0.55);
  // glyph-local pixel bounds
  double gx0 = 1e300, gy0 = 1e300, gx1 = -1e300, gy1 = -1e300;
  for (const auto& stroke : g.strokes)
    for (const Vec2& p : stroke) {
      gx0 = std::min(gx0, x + p.x * size_px);
      gy0 = std::min(gy0, y + p.y * size_px);
      gx1 = std::max(gx1, x + p.x * size_px);
      gy1 = std::max(gy1, y + p.y * size_px);
    }
  if (gx0 > gx1) return;  // no strokes (e.g. space)
  int px0 = std::max(0, int(std::floor(gx0 - r - 1)));
  int py0 = std::max(0, int(std::floor(gy0 - r - 1)));
  int px1 = std::min(w - 1, int(std::ceil(gx1 + r + 1)));
  int py1 = std::min(h - 1, int(std::ceil(gy1 + r + 1)));
  if (px0 > px1 || py0 > py1) return;
  int bw = px1 - px0 + 1, bh = py1 - py0 + 1;

  // 4-sample coverage bits per pixel within the glyph box
  std::vector<uint8_t> hits(size_t(bw) * size_t(bh), 0);
  const double offs[4][2] = {{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}};
  double r2 = r * r;
  for (const auto& stroke : g.strokes)
    for (size_t i = 0; i + 1 < stroke.size(); ++i) {
      double ax = x + stroke[i].x * size_px, ay = y + stroke[i].y * size_px;
      double bx = x + stroke[i + 1].x * size_px, by = y + stroke[i + 1].y * size_px;
      int sx0 = std::max(px0, int(std::floor(std::min(ax, bx) - r - 1)));
      int sy0 = std::max(py0, int(std::floor(std::min(ay, by) - r - 1)));
      int sx1 = std::min(px1, int(std::ceil(std::max(ax, bx) + r + 1)));
      int sy1 = std::min(py1, int(std::ceil(std::max(ay, by) + r + 1)));
      double dx = bx - ax, dy = by - ay;
      double len2 = dx * dx + dy * dy;
      for (int yy = sy0; yy <= sy1; ++yy)
        for (int xx = sx0; xx <= sx1; ++xx) {
          uint8_t& hv = hits[size_t(yy - py0) * size_t(bw) + size_t(xx - px0)];
          if (hv == 0xf) continue;
          for (int s = 0; s < 4; ++s) {
            if (hv & (1 << s)) continue;
            double qx = xx + offs[s][0], qy = yy + offs[s][1];
            double t = len2 > 0 ? ((qx - ax) * dx + (qy - ay) * dy) / len2 : 0.0;
            t = std::clamp(t, 0.0, 1.0);
            double ex = ax + t * dx - qx, ey = ay + t * dy - qy;
            if (ex * ex + ey * ey <= r2) hv = uint8_t(hv | (1 << s));
          }
        }
    }
  for (int yy = py0; yy <= py1; ++yy)
    for (int xx = px0; xx <= px1; ++xx) {
      uint8_t hv = hits[size_t(yy - py0) * size_t(bw) + size_t(xx - px0)];
      if (!hv) continue;
      int bits = (hv & 1) + ((hv >> 1) & 1) + ((hv >> 2) & 1) + ((hv >> 3) & 1);
      float cov = ink * float(bits) * 0.25f;
      float& dst = canvas.data()[yy * w + xx];
      dst = std::max(dst, cov);
    }
}

std::vector<StrokeFont::CharBox> StrokeFont::draw_text(Tensor<float>& canvas,
                                                       const std::string& text, double pen_x,
                                                       double pen_y, double size_px, float ink,
                                                       int* missing) const {
  check(canvas.ndim() == 3 && canvas.dim(0) == 1, "bad_shape", "draw_text canvas");
  std::vector<CharBox> boxes;
  double x = pen_x;
  for (char c : text) {
    auto it = glyphs_.find(c);
    const Glyph* g;
    if (it == glyphs_.end()) {
      g = &fallback_box();
      if (missing != nullptr) ++*missing;
    } else {
      g = &it->second;
    }
    draw_glyph(canvas, *g, x, pen_y, size_px, ink);
    boxes.push_back({x, x + g->advance * size_px});
    x += g->advance * size_px;
  }
  return boxes;
}

}  // namespace gd
