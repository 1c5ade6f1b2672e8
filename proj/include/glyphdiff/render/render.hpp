#pragma once

#include <vector>

#include "glyphdiff/config.hpp"
#include "glyphdiff/core/ops.hpp"
#include "glyphdiff/corpus/corpus.hpp"
#include "glyphdiff/font/stroke_font.hpp"

namespace gd::render {

enum class Mode { generate, edit };

// Image-space conditions fed to the auxiliary latent module.
struct ConditionBundle {
  Tensor<float> glyph;     // l_g: [1,Hg,Wg] in [0,1], rendered at glyph_scale x
  Tensor<float> position;  // l_p: [1,Hp,Wp] in {0,1}
  Image masked;            // l_m: [3,H,W] in [-1,1]; sentinel 0 where masked
  Mode mode = Mode::generate;
};

struct RenderWarnings {
  int missing_glyphs = 0;
  int skipped_lines = 0;
};

// Multi-line glyph condition: each valid line is drawn inside the axis-aligned
// enclosing rectangle of its polygon, font size maximized subject to fitting.
// Polygons are in image coordinates; scale maps them onto the (hg, wg) canvas.
Tensor<float> render_glyphs(const std::vector<corpus::TextLine>& lines, int hg, int wg,
                            double scale, const StrokeFont& font,
                            RenderWarnings* warn = nullptr);

// Binary position map: even-odd polygon fill of every valid line.
Tensor<float> render_positions(const std::vector<corpus::TextLine>& lines, int hp, int wp,
                               double scale);

// Masked image: fully masked (sentinel 0) in generate mode; text regions
// masked, everything else copied, in edit mode.
Image render_masked_image(const Image& image, const std::vector<corpus::TextLine>& lines,
                          Mode mode);

// Single centered text line on a (he, we) canvas; empty text gives an
// all-zeros image (the null-text embedding input). Optional per-character
// horizontal extents for alignment supervision.
Tensor<float> render_text_line(const std::string& text, int he, int we, const StrokeFont& font,
                               int max_chars = 20,
                               std::vector<StrokeFont::CharBox>* boxes = nullptr);

// Crop/affine/pad/normalize: fits the minimum-area rotated rectangle of the
// polygon, maps it upright at height he (downscaling if wider than we),
// centers it, and converts to single-channel luminance in [-1,1].
Image crop_text_region(const Image& image, const Polygon& polygon, int he, int we);

// Differentiable version of the same crop (gradients flow into the image).
template <typename S>
Var<S> crop_text_region_op(Tape<S>& tape, Var<S> image, const Polygon& polygon, int he, int we);

// Crop affine used by both paths; throws degenerate_region for unusable
// polygons.
std::array<float, 6> crop_affine(const Polygon& polygon, int he, int we);

// Bundle assembly for one sample. In generate mode `image` may be empty.
ConditionBundle make_bundle(const Image& image, const std::vector<corpus::TextLine>& lines,
                            Mode mode, int image_size, const RenderConfig& rc,
                            const StrokeFont& font, RenderWarnings* warn = nullptr);

// Null conditions (classifier-free unconditional branch).
ConditionBundle null_bundle(int image_size, const RenderConfig& rc);

}  // namespace gd::render
