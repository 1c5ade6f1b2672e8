#include "glyphdiff/render/render.hpp"

#include <cmath>

#include "glyphdiff/core/error.hpp"

namespace gd::render {

Tensor<float> render_glyphs(const std::vector<corpus::TextLine>& lines, int hg, int wg,
                            double scale, const StrokeFont& font, RenderWarnings* warn) {
  Tensor<float> out({1, hg, wg});
  for (const corpus::TextLine& l : lines) {
    if (!l.valid || l.text.empty()) continue;
    if (l.polygon.size() < 4) {
      if (warn != nullptr) ++warn->skipped_lines;
      continue;
    }
    double x0, y0, x1, y1;
    polygon_bounds(scale_polygon(l.polygon, scale, scale), x0, y0, x1, y1);
    double bw = x1 - x0, bh = y1 - y0;
    if (bw <= 1 || bh <= 1) {
      if (warn != nullptr) ++warn->skipped_lines;
      continue;
    }
    double em_w = font.text_width(l.text);
    double size = std::min(bh, em_w > 0 ? bw / em_w : bh);
    double tw = em_w * size;
    double pen_x = x0 + (bw - tw) * 0.5;
    double pen_y = y0 + (bh - size) * 0.5;
    int missing = 0;
    font.draw_text(out, l.text, pen_x, pen_y, size, 1.0f, &missing);
    if (warn != nullptr) warn->missing_glyphs += missing;
  }
  return out;
}

Tensor<float> render_positions(const std::vector<corpus::TextLine>& lines, int hp, int wp,
                               double scale) {
  Tensor<float> out({1, hp, wp});
  for (const corpus::TextLine& l : lines) {
    if (!l.valid || l.polygon.size() < 3) continue;
    fill_polygon(out, l.polygon, 1.0f, scale, scale);
  }
  return out;
}

Image render_masked_image(const Image& image, const std::vector<corpus::TextLine>& lines,
                          Mode mode) {
  if (mode == Mode::generate) {
    check(!image.empty() && image.ndim() == 3, "bad_shape",
          "render_masked_image needs image dimensions");
    return Image({3, image.dim(1), image.dim(2)});  // sentinel 0 everywhere
  }
  check(!image.empty() && image.ndim() == 3 && image.dim(0) == 3, "bad_shape",
        "render_masked_image edit mode needs an RGB image");
  Image out = image;
  int h = image.dim(1), w = image.dim(2);
  Tensor<float> mask({1, h, w});
  for (const corpus::TextLine& l : lines) {
    if (!l.valid || l.polygon.size() < 3) continue;
    fill_polygon(mask, l.polygon, 1.0f);
  }
  for (int c = 0; c < 3; ++c)
    for (int p = 0; p < h * w; ++p)
      if (mask.data()[p] > 0) out.data()[c * h * w + p] = 0.0f;
  return out;
}

Tensor<float> render_text_line(const std::string& text, int he, int we, const StrokeFont& font,
                               int max_chars, std::vector<StrokeFont::CharBox>* boxes) {
  check(int(text.size()) <= max_chars, "text_too_long",
        "text line exceeds max_chars (" + std::to_string(max_chars) + ")");
  Tensor<float> out({1, he, we});
  if (boxes != nullptr) boxes->clear();
  if (text.empty()) return out;
  double em_w = font.text_width(text);
  double size = std::min(he * 0.84, em_w > 0 ? (we - 4.0) / em_w : he * 0.84);
  double tw = em_w * size;
  double pen_x = (we - tw) * 0.5;
  double pen_y = (he - size) * 0.5;
  auto cb = font.draw_text(out, text, pen_x, pen_y, size);
  if (boxes != nullptr) *boxes = std::move(cb);
  return out;
}

std::array<float, 6> crop_affine(const Polygon& polygon, int he, int we) {
  check(polygon.size() >= 4, "degenerate_region", "crop polygon needs >= 4 points");
  RotatedRect rect = min_area_rect(polygon);
  check(rect.w > 1e-9 && rect.h > 1e-9, "degenerate_region", "crop polygon has zero area");
  double s = std::min(double(he) / rect.h, double(we) / rect.w);
  double dst_w = rect.w * s, dst_h = rect.h * s;
  return rect_to_canvas_affine(rect, dst_w, dst_h, we * 0.5, he * 0.5);
}

namespace {
const std::vector<float> kLuma = {0.299f, 0.587f, 0.114f};
const std::vector<double> kLumaD = {0.299, 0.587, 0.114};
}  // namespace

Image crop_text_region(const Image& image, const Polygon& polygon, int he, int we) {
  check(image.ndim() == 3, "bad_shape", "crop_text_region image");
  auto m = crop_affine(polygon, he, we);
  Image warped = affine_sample_image(image, m, he, we);
  if (image.dim(0) == 1) return warped;
  Image out({1, he, we});
  int hw = he * we;
  for (int p = 0; p < hw; ++p)
    out.data()[p] = kLuma[0] * warped.data()[p] + kLuma[1] * warped.data()[hw + p] +
                    kLuma[2] * warped.data()[2 * hw + p];
  return out;
}

template <typename S>
Var<S> crop_text_region_op(Tape<S>& tape, Var<S> image, const Polygon& polygon, int he,
                           int we) {
  auto mf = crop_affine(polygon, he, we);
  std::array<S, 6> m;
  for (int i = 0; i < 6; ++i) m[size_t(i)] = S(mf[size_t(i)]);
  Var<S> warped = affine_sample(image, m, he, we);
  if (image.dim(0) == 1) return warped;
  std::vector<S> luma;
  for (double v : kLumaD) luma.push_back(S(v));
  return channel_weighted_sum(warped, luma);
}

template Var<float> crop_text_region_op(Tape<float>&, Var<float>, const Polygon&, int, int);
template Var<double> crop_text_region_op(Tape<double>&, Var<double>, const Polygon&, int, int);

ConditionBundle make_bundle(const Image& image, const std::vector<corpus::TextLine>& lines,
                            Mode mode, int image_size, const RenderConfig& rc,
                            const StrokeFont& font, RenderWarnings* warn) {
  ConditionBundle b;
  b.mode = mode;
  int gs = rc.glyph_scale;
  b.glyph = render_glyphs(lines, image_size * gs, image_size * gs, double(gs), font, warn);
  b.position = render_positions(lines, image_size, image_size, 1.0);
  if (mode == Mode::generate) {
    b.masked = Image({3, image_size, image_size});
  } else {
    b.masked = render_masked_image(image, lines, mode);
  }
  return b;
}

ConditionBundle null_bundle(int image_size, const RenderConfig& rc) {
  ConditionBundle b;
  b.mode = Mode::generate;
  int gs = rc.glyph_scale;
  b.glyph = Tensor<float>({1, image_size * gs, image_size * gs});
  b.position = Tensor<float>({1, image_size, image_size});
  b.masked = Image({3, image_size, image_size});
  return b;
}

}  // namespace gd::render
