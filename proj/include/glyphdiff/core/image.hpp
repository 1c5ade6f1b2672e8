#pragma once

#include <array>
#include <string>

#include "glyphdiff/core/tensor.hpp"

namespace gd {

// Images are Tensor<float> in CHW layout: RGB images [3,H,W] in [-1,1],
// single-channel maps [1,H,W] (glyphs/positions in [0,1]).
using Image = Tensor<float>;

// 8-bit PNG IO. Values are mapped with v = px/127.5 - 1 on load and the
// inverse (rounded, clamped) on save. Grayscale tensors save as color type 0.
Image load_png(const std::string& path);
void save_png(const std::string& path, const Image& img);

// Map [0,1] single-channel data to [-1,1] and back.
inline float unit_to_signed(float v) { return 2.0f * v - 1.0f; }
inline float signed_to_unit(float v) { return 0.5f * (v + 1.0f); }

// Plain (non-autograd) bilinear warp with zero border, matching the
// affine_sample op: out(i,j) samples src at M*(j+.5,i+.5)-.5.
Image affine_sample_image(const Image& src, const std::array<float, 6>& m, int out_h,
                          int out_w);

// Bilinear resize.
Image resize_bilinear(const Image& src, int out_h, int out_w);

float psnr(const Image& a, const Image& b, float peak = 2.0f);

}  // namespace gd
