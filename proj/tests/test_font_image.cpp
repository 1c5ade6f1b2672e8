#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "glyphdiff/core/image.hpp"
#include "glyphdiff/font/stroke_font.hpp"

using namespace gd;

TEST_CASE("builtin font renders every alphabet glyph distinctly") {
  StrokeFont font = StrokeFont::load("builtin:sans");
  std::string alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  std::vector<Tensor<float>> rasters;
  for (char c : alphabet) {
    REQUIRE(font.has_glyph(c));
    Tensor<float> canvas({1, 32, 32});
    font.draw_text(canvas, std::string(1, c), 4, 2, 28);
    CHECK(canvas.array().sum() > 10.0f);  // visible ink
    rasters.push_back(canvas);
  }
  for (size_t i = 0; i < rasters.size(); ++i)
    for (size_t j = i + 1; j < rasters.size(); ++j) {
      float diff = (rasters[i].array() - rasters[j].array()).abs().sum();
      INFO("glyphs ", alphabet[i], " vs ", alphabet[j]);
      CHECK(diff > 8.0f);
    }
}

TEST_CASE("missing glyphs render the fallback box and are counted") {
  StrokeFont font = StrokeFont::load("builtin:sans");
  Tensor<float> canvas({1, 32, 32});
  int missing = 0;
  font.draw_text(canvas, "@", 4, 2, 28, 1.0f, &missing);
  CHECK(missing == 1);
  CHECK(canvas.array().sum() > 10.0f);
}

TEST_CASE("font json round trip") {
  StrokeFont font = StrokeFont::load("builtin:sans");
  std::string path = "font_roundtrip.json";
  {
    std::ofstream os(path);
    os << font.to_json();
  }
  StrokeFont loaded = StrokeFont::load(path);
  Tensor<float> a({1, 40, 120}), b({1, 40, 120});
  font.draw_text(a, "HELLO", 2, 2, 30);
  loaded.draw_text(b, "HELLO", 2, 2, 30);
  CHECK(max_abs_diff(a, b) == 0.0f);
  std::remove(path.c_str());
  CHECK_THROWS_AS(StrokeFont::load("no_such_font.json"), Error);
}

TEST_CASE("png round trip is exact for quantized images") {
  Rng rng(4);
  Image img({3, 17, 23});
  for (int i = 0; i < img.numel(); ++i)
    img[i] = float(rng.range(0, 255)) / 127.5f - 1.0f;
  save_png("roundtrip.png", img);
  Image back = load_png("roundtrip.png");
  CHECK(back.shape() == img.shape());
  CHECK(max_abs_diff(img, back) < 1e-6f);
  std::remove("roundtrip.png");

  Image gray({1, 9, 11});
  for (int i = 0; i < gray.numel(); ++i) gray[i] = float(rng.range(0, 255)) / 127.5f - 1.0f;
  save_png("gray.png", gray);
  Image gback = load_png("gray.png");
  CHECK(max_abs_diff(gray, gback) < 1e-6f);
  std::remove("gray.png");
}

TEST_CASE("affine identity sampling is exact inside the image") {
  Rng rng(8);
  Image img = Image::randn({2, 6, 7}, rng);
  std::array<float, 6> ident = {1, 0, 0, 0, 1, 0};
  Image out = affine_sample_image(img, ident, 6, 7);
  CHECK(max_abs_diff(img, out) < 1e-6f);
}
