#pragma once

#include <map>
#include <string>
#include <vector>

#include "glyphdiff/core/geometry.hpp"
#include "glyphdiff/core/tensor.hpp"

namespace gd {

// Vector stroke font: each glyph is a set of polylines in a unit box
// (x right, y down, y in [0,1] covering the full glyph height). Rendering
// strokes them with round caps at a configurable relative width.
class StrokeFont {
 public:
  struct Glyph {
    std::vector<std::vector<Vec2>> strokes;
    double advance = 0.78;
  };

  // Horizontal extent of one rendered character, in canvas pixels.
  struct CharBox {
    double x0 = 0;
    double x1 = 0;
  };

  // Accepts "builtin:sans" or a path to a font JSON file.
  static StrokeFont load(const std::string& path_or_builtin);

  bool has_glyph(char c) const { return glyphs_.count(c) > 0; }
  const std::string& name() const { return name_; }

  // Width of `text` in em units (1 em = rendered glyph height).
  double text_width(const std::string& text) const;

  // Stroke `text` onto a [1,H,W] canvas with ink value composited by max.
  // pen_x/pen_y are the top-left of the first glyph cell; size_px is the em
  // size in pixels. Characters missing from the font render as a fallback
  // box; their count is reported via missing (optional).
  std::vector<CharBox> draw_text(Tensor<float>& canvas, const std::string& text, double pen_x,
                                 double pen_y, double size_px, float ink = 1.0f,
                                 int* missing = nullptr) const;

  std::string to_json() const;

 private:
  std::string name_ = "sans";
  double stroke_width_ = 0.095;  // em
  std::map<char, Glyph> glyphs_;

  void draw_glyph(Tensor<float>& canvas, const Glyph& g, double x, double y, double size_px,
                  float ink) const;

  friend StrokeFont builtin_sans_font();
};

// The bundled sans-style stroke font (A-Z, 0-9, space).
StrokeFont builtin_sans_font();

}  // namespace gd
