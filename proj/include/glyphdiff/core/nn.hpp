#pragma once

#include <cmath>
#include <string>

#include "glyphdiff/core/ops.hpp"

// Thin parameterized layers over the autograd ops. Layers register their
// parameters in a ParamStore under hierarchical names and are cheap to copy
// (they hold raw Param pointers).
namespace gd {

template <typename S>
Tensor<S> kaiming_init(std::vector<int> shape, int fan_in, Rng& rng) {
  S std = S(std::sqrt(2.0 / double(fan_in)));
  return Tensor<S>::randn(std::move(shape), rng, std);
}

template <typename S>
struct Linear {
  Param<S>* w = nullptr;  // [in, out]
  Param<S>* b = nullptr;

  static Linear create(ParamStore<S>& ps, const std::string& name, int in, int out, Rng& rng,
                       bool zero_init = false) {
    Linear l;
    Tensor<S> wi = zero_init ? Tensor<S>::zeros({in, out})
                             : Tensor<S>::randn({in, out}, rng, S(std::sqrt(1.0 / in)));
    l.w = ps.add(name + ".w", std::move(wi));
    l.b = ps.add(name + ".b", Tensor<S>::zeros({out}));
    return l;
  }

  // x: [rows, in] (higher-rank inputs are flattened over leading dims).
  Var<S> operator()(Tape<S>& t, Var<S> x) const {
    std::vector<int> out_shape = x.shape();
    int in = w->value.dim(0), out = w->value.dim(1);
    int rows = x.numel() / in;
    out_shape.back() = out;
    Var<S> x2 = reshape(x, {rows, in});
    Var<S> y = add_rowvec(matmul(x2, t.param(w)), t.param(b));
    return reshape(y, out_shape);
  }
};

template <typename S>
struct Conv2d {
  Param<S>* w = nullptr;  // [out, in, k, k]
  Param<S>* b = nullptr;
  int stride = 1;
  int pad = 0;

  static Conv2d create(ParamStore<S>& ps, const std::string& name, int in, int out, int k,
                       int stride, int pad, Rng& rng, bool zero_init = false) {
    Conv2d c;
    c.stride = stride;
    c.pad = pad;
    Tensor<S> wi = zero_init ? Tensor<S>::zeros({out, in, k, k})
                             : kaiming_init<S>({out, in, k, k}, in * k * k, rng);
    c.w = ps.add(name + ".w", std::move(wi));
    c.b = ps.add(name + ".b", Tensor<S>::zeros({out}));
    return c;
  }

  Var<S> operator()(Tape<S>& t, Var<S> x) const {
    return conv2d(x, t.param(w), t.param(b), stride, pad);
  }
};

template <typename S>
struct GroupNorm {
  Param<S>* gamma = nullptr;
  Param<S>* beta = nullptr;
  int groups = 8;

  static GroupNorm create(ParamStore<S>& ps, const std::string& name, int channels,
                          int groups) {
    GroupNorm g;
    while (channels % groups != 0) groups /= 2;
    g.groups = std::max(groups, 1);
    g.gamma = ps.add(name + ".g", Tensor<S>::full({channels}, S(1)));
    g.beta = ps.add(name + ".b", Tensor<S>::zeros({channels}));
    return g;
  }

  Var<S> operator()(Tape<S>& t, Var<S> x) const {
    return group_norm(x, groups, t.param(gamma), t.param(beta));
  }
};

template <typename S>
struct LayerNorm {
  Param<S>* gamma = nullptr;
  Param<S>* beta = nullptr;

  static LayerNorm create(ParamStore<S>& ps, const std::string& name, int dim) {
    LayerNorm l;
    l.gamma = ps.add(name + ".g", Tensor<S>::full({dim}, S(1)));
    l.beta = ps.add(name + ".b", Tensor<S>::zeros({dim}));
    return l;
  }

  Var<S> operator()(Tape<S>& t, Var<S> x) const {
    return layer_norm(x, t.param(gamma), t.param(beta));
  }
};

// Additive attention mask: 0 where attending is allowed, -1e9 on padded keys.
// Shaped [n*heads, tq, tk] ready to add onto the score matrix.
template <typename S>
Tensor<S> key_padding_mask(const std::vector<int>& valid_lens, int heads, int tq, int tk) {
  int n = int(valid_lens.size());
  Tensor<S> m({n * heads, tq, tk});
  for (int i = 0; i < n; ++i)
    for (int h = 0; h < heads; ++h)
      for (int q = 0; q < tq; ++q)
        for (int k = 0; k < tk; ++k)
          m.data()[(((i * heads + h) * tq) + q) * tk + k] =
              (k < valid_lens[size_t(i)]) ? S(0) : S(-1e9);
  return m;
}

// Multi-head attention over packed sequences. Query [N,Tq,Dq], context
// [N,Tk,Dc]; self-attention passes the same Var twice.
template <typename S>
struct Attention {
  Linear<S> q, k, v, out;
  int heads = 4;
  int dim = 0;

  static Attention create(ParamStore<S>& ps, const std::string& name, int query_dim,
                          int context_dim, int dim, int heads, Rng& rng) {
    Attention a;
    a.heads = heads;
    a.dim = dim;
    a.q = Linear<S>::create(ps, name + ".q", query_dim, dim, rng);
    a.k = Linear<S>::create(ps, name + ".k", context_dim, dim, rng);
    a.v = Linear<S>::create(ps, name + ".v", context_dim, dim, rng);
    a.out = Linear<S>::create(ps, name + ".o", dim, query_dim, rng);
    return a;
  }

  Var<S> operator()(Tape<S>& t, Var<S> query, Var<S> context,
                    const std::vector<int>* key_valid = nullptr) const {
    int n = query.dim(0), tq = query.dim(1), tk = context.dim(1);
    int dh = dim / heads;
    Var<S> qh = split_heads(q(t, query), heads);
    Var<S> kh = split_heads(k(t, context), heads);
    Var<S> vh = split_heads(v(t, context), heads);
    Var<S> scores = scale(bmm(qh, kh, false, true), S(1.0 / std::sqrt(double(dh))));
    if (key_valid != nullptr) {
      Var<S> m = t.constant(key_padding_mask<S>(*key_valid, heads, tq, tk));
      scores = add(scores, m);
    }
    Var<S> attn = softmax_last(scores);
    Var<S> mixed = merge_heads(bmm(attn, vh, false, false), heads);
    (void)n;
    return out(t, mixed);
  }
};

// Pre-norm transformer block with a SiLU MLP.
template <typename S>
struct TransformerBlock {
  LayerNorm<S> ln1, ln2;
  Attention<S> attn;
  Linear<S> fc1, fc2;

  static TransformerBlock create(ParamStore<S>& ps, const std::string& name, int dim,
                                 int heads, Rng& rng) {
    TransformerBlock b;
    b.ln1 = LayerNorm<S>::create(ps, name + ".ln1", dim);
    b.ln2 = LayerNorm<S>::create(ps, name + ".ln2", dim);
    b.attn = Attention<S>::create(ps, name + ".attn", dim, dim, dim, heads, rng);
    b.fc1 = Linear<S>::create(ps, name + ".fc1", dim, dim * 4, rng);
    b.fc2 = Linear<S>::create(ps, name + ".fc2", dim * 4, dim, rng);
    return b;
  }

  Var<S> operator()(Tape<S>& t, Var<S> x, const std::vector<int>* valid) const {
    Var<S> h = ln1(t, x);
    x = add(x, attn(t, h, h, valid));
    Var<S> m = fc2(t, silu(fc1(t, ln2(t, x))));
    return add(x, m);
  }
};

// Sinusoidal features for integer timesteps, matching the usual diffusion
// embedding layout [sin | cos].
template <typename S>
Tensor<S> timestep_features(const std::vector<int>& ts, int dim) {
  int half = dim / 2;
  Tensor<S> out({int(ts.size()), dim});
  for (size_t i = 0; i < ts.size(); ++i)
    for (int j = 0; j < half; ++j) {
      double freq = std::exp(-std::log(10000.0) * double(j) / double(half));
      double a = double(ts[i]) * freq;
      out.data()[int(i) * dim + j] = S(std::sin(a));
      out.data()[int(i) * dim + half + j] = S(std::cos(a));
    }
  return out;
}

}  // namespace gd
