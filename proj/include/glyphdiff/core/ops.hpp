#pragma once

#include <array>
#include <vector>

#include "glyphdiff/core/tape.hpp"

// Autograd ops as free functions over Var. Shapes follow NCHW for images and
// feature maps, [T,D] / [N,T,D] for token sequences. All ops are pure; the
// backward closures recompute cheap intermediates instead of caching large
// buffers.
namespace gd {

// ---- elementwise ----
template <typename S> Var<S> add(Var<S> a, Var<S> b);
template <typename S> Var<S> sub(Var<S> a, Var<S> b);
template <typename S> Var<S> mul(Var<S> a, Var<S> b);
template <typename S> Var<S> add_scaled(Var<S> a, Var<S> b, S alpha);  // a + alpha*b
template <typename S> Var<S> scale(Var<S> a, S c);
template <typename S> Var<S> add_const(Var<S> a, S c);
template <typename S> Var<S> square(Var<S> a);
template <typename S> Var<S> exp_op(Var<S> a);
template <typename S> Var<S> silu(Var<S> a);
template <typename S> Var<S> relu(Var<S> a);
template <typename S> Var<S> sigmoid_op(Var<S> a);
template <typename S> Var<S> tanh_op(Var<S> a);
// Elementwise product with a constant tensor (no gradient into w).
template <typename S> Var<S> mul_tensor_const(Var<S> a, Tensor<S> w);

// ---- reductions / losses ----
template <typename S> Var<S> sum_all(Var<S> a);
template <typename S> Var<S> mean_all(Var<S> a);
template <typename S> Var<S> mse(Var<S> a, Var<S> b);           // mean squared error
template <typename S> Var<S> masked_sse(Var<S> a, Var<S> b, Tensor<S> w);  // sum w*(a-b)^2
template <typename S> Var<S> cross_entropy(Var<S> logits, const std::vector<int>& targets);

// ---- shape ----
template <typename S> Var<S> reshape(Var<S> a, std::vector<int> shape);
template <typename S> Var<S> concat_ch(Var<S> a, Var<S> b);          // along dim 1 of NCHW
template <typename S> Var<S> nchw_to_ntc(Var<S> x);                  // [N,C,H,W] -> [N,H*W,C]
template <typename S> Var<S> ntc_to_nchw(Var<S> x, int h, int w);    // inverse
template <typename S> Var<S> stack0(const std::vector<Var<S>>& xs); // [k,...]
template <typename S> Var<S> pad_rows(Var<S> x, int rows);           // [T,D] -> [rows,D], zero pad

// ---- linear algebra ----
template <typename S> Var<S> matmul(Var<S> a, Var<S> b);  // [M,K]x[K,N]
// Batched matmul with optional transposes: [B,M,K] x [B,K,N] -> [B,M,N].
template <typename S> Var<S> bmm(Var<S> a, Var<S> b, bool ta = false, bool tb = false);
template <typename S> Var<S> add_rowvec(Var<S> x, Var<S> b);  // [M,N] + [N]

// ---- spatial ----
template <typename S>
Var<S> conv2d(Var<S> x, Var<S> w, Var<S> b, int stride, int pad);
template <typename S> Var<S> upsample_nearest2(Var<S> x);
template <typename S> Var<S> avgpool_all(Var<S> x);                    // [N,C,H,W] -> [N,C]
template <typename S> Var<S> slot_pool(Var<S> x, int slots);           // -> [N,slots,C]
template <typename S> Var<S> add_channel_bias(Var<S> x, Var<S> v);     // [N,C,H,W] + [N,C]
template <typename S>
Var<S> group_norm(Var<S> x, int groups, Var<S> gamma, Var<S> beta, S eps = S(1e-5));
template <typename S>
Var<S> layer_norm(Var<S> x, Var<S> gamma, Var<S> beta, S eps = S(1e-5));
template <typename S> Var<S> softmax_last(Var<S> x);
// Luminance-style fixed channel combination: [3,H,W] -> [1,H,W].
template <typename S> Var<S> channel_weighted_sum(Var<S> x, const std::vector<S>& w);
// Bilinear warp: out(i,j) samples img at M*(j+.5,i+.5)-.5 (source pixel coords),
// zero outside. M is row-major 2x3. Gradient flows into img only.
template <typename S>
Var<S> affine_sample(Var<S> img, const std::array<S, 6>& m, int out_h, int out_w);

// ---- attention head reshuffles ----
template <typename S> Var<S> split_heads(Var<S> x, int heads);   // [N,T,h*dh] -> [N*h,T,dh]
template <typename S> Var<S> merge_heads(Var<S> x, int heads);   // inverse

// ---- sequences ----
template <typename S> Var<S> embedding(Var<S> table, const std::vector<int>& ids);
template <typename S>
Var<S> row_substitute(Var<S> base, Var<S> rows, const std::vector<int>& idx);

}  // namespace gd
