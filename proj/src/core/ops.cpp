#include "glyphdiff/core/ops.hpp"

#include <array>
#include <cmath>

namespace gd {

namespace {

template <typename S>
void check_same_shape(const Var<S>& a, const Var<S>& b, const char* what) {
  check(a.val().shape() == b.val().shape(), "shape_mismatch", what);
}

}  // namespace

// ---------------- elementwise ----------------

template <typename S>
Var<S> add(Var<S> a, Var<S> b) {
  check_same_shape(a, b, "add");
  Tensor<S> v(a.shape());
  v.array() = a.val().array() + b.val().array();
  int pa = a.id, pb = b.id;
  return a.tape->op(std::move(v), {pa, pb}, [pa, pb](Tape<S>& t, int id) {
    t.accumulate(pa, t.grad(id));
    t.accumulate(pb, t.grad(id));
  });
}

template <typename S>
Var<S> sub(Var<S> a, Var<S> b) {
  check_same_shape(a, b, "sub");
  Tensor<S> v(a.shape());
  v.array() = a.val().array() - b.val().array();
  int pa = a.id, pb = b.id;
  return a.tape->op(std::move(v), {pa, pb}, [pa, pb](Tape<S>& t, int id) {
    t.accumulate(pa, t.grad(id));
    t.accumulate_scaled(pb, t.grad(id), S(-1));
  });
}

template <typename S>
Var<S> mul(Var<S> a, Var<S> b) {
  check_same_shape(a, b, "mul");
  Tensor<S> v(a.shape());
  v.array() = a.val().array() * b.val().array();
  int pa = a.id, pb = b.id;
  return a.tape->op(std::move(v), {pa, pb}, [pa, pb](Tape<S>& t, int id) {
    if (t.needs_grad(pa)) t.grad(pa).array() += t.grad(id).array() * t.value(pb).array();
    if (t.needs_grad(pb)) t.grad(pb).array() += t.grad(id).array() * t.value(pa).array();
  });
}

template <typename S>
Var<S> add_scaled(Var<S> a, Var<S> b, S alpha) {
  check_same_shape(a, b, "add_scaled");
  Tensor<S> v(a.shape());
  v.array() = a.val().array() + alpha * b.val().array();
  int pa = a.id, pb = b.id;
  return a.tape->op(std::move(v), {pa, pb}, [pa, pb, alpha](Tape<S>& t, int id) {
    t.accumulate(pa, t.grad(id));
    t.accumulate_scaled(pb, t.grad(id), alpha);
  });
}

template <typename S>
Var<S> scale(Var<S> a, S c) {
  Tensor<S> v(a.shape());
  v.array() = a.val().array() * c;
  int pa = a.id;
  return a.tape->op(std::move(v), {pa}, [pa, c](Tape<S>& t, int id) {
    t.accumulate_scaled(pa, t.grad(id), c);
  });
}

template <typename S>
Var<S> add_const(Var<S> a, S c) {
  Tensor<S> v(a.shape());
  v.array() = a.val().array() + c;
  int pa = a.id;
  return a.tape->op(std::move(v), {pa}, [pa](Tape<S>& t, int id) {
    t.accumulate(pa, t.grad(id));
  });
}

template <typename S>
Var<S> square(Var<S> a) {
  Tensor<S> v(a.shape());
  v.array() = a.val().array().square();
  int pa = a.id;
  return a.tape->op(std::move(v), {pa}, [pa](Tape<S>& t, int id) {
    t.grad(pa).array() += S(2) * t.grad(id).array() * t.value(pa).array();
  });
}

template <typename S>
Var<S> exp_op(Var<S> a) {
  Tensor<S> v(a.shape());
  v.array() = a.val().array().exp();
  int pa = a.id;
  return a.tape->op(std::move(v), {pa}, [pa](Tape<S>& t, int id) {
    t.grad(pa).array() += t.grad(id).array() * t.value(id).array();
  });
}

template <typename S>
Var<S> silu(Var<S> a) {
  Tensor<S> v(a.shape());
  auto sig = (S(1) / (S(1) + (-a.val().array()).exp())).eval();
  v.array() = a.val().array() * sig;
  int pa = a.id;
  return a.tape->op(std::move(v), {pa}, [pa](Tape<S>& t, int id) {
    auto x = t.value(pa).array();
    auto sg = (S(1) / (S(1) + (-x).exp())).eval();
    t.grad(pa).array() += t.grad(id).array() * (sg + x * sg * (S(1) - sg));
  });
}

template <typename S>
Var<S> relu(Var<S> a) {
  Tensor<S> v(a.shape());
  v.array() = a.val().array().max(S(0));
  int pa = a.id;
  return a.tape->op(std::move(v), {pa}, [pa](Tape<S>& t, int id) {
    t.grad(pa).array() +=
        t.grad(id).array() * (t.value(pa).array() > S(0)).template cast<S>();
  });
}

template <typename S>
Var<S> sigmoid_op(Var<S> a) {
  Tensor<S> v(a.shape());
  v.array() = S(1) / (S(1) + (-a.val().array()).exp());
  int pa = a.id;
  return a.tape->op(std::move(v), {pa}, [pa](Tape<S>& t, int id) {
    auto y = t.value(id).array();
    t.grad(pa).array() += t.grad(id).array() * y * (S(1) - y);
  });
}

template <typename S>
Var<S> tanh_op(Var<S> a) {
  Tensor<S> v(a.shape());
  v.array() = a.val().array().tanh();
  int pa = a.id;
  return a.tape->op(std::move(v), {pa}, [pa](Tape<S>& t, int id) {
    auto y = t.value(id).array();
    t.grad(pa).array() += t.grad(id).array() * (S(1) - y * y);
  });
}

template <typename S>
Var<S> mul_tensor_const(Var<S> a, Tensor<S> w) {
  check(a.val().shape() == w.shape(), "shape_mismatch", "mul_tensor_const");
  Tensor<S> v(a.shape());
  v.array() = a.val().array() * w.array();
  int pa = a.id;
  auto wp = std::make_shared<Tensor<S>>(std::move(w));
  return a.tape->op(std::move(v), {pa}, [pa, wp](Tape<S>& t, int id) {
    t.grad(pa).array() += t.grad(id).array() * wp->array();
  });
}

// ---------------- reductions / losses ----------------

template <typename S>
Var<S> sum_all(Var<S> a) {
  Tensor<S> v = Tensor<S>::scalar(a.val().array().sum());
  int pa = a.id;
  return a.tape->op(std::move(v), {pa}, [pa](Tape<S>& t, int id) {
    t.grad(pa).array() += t.grad(id)[0];
  });
}

template <typename S>
Var<S> mean_all(Var<S> a) {
  int n = a.numel();
  Tensor<S> v = Tensor<S>::scalar(a.val().array().sum() / S(n));
  int pa = a.id;
  return a.tape->op(std::move(v), {pa}, [pa, n](Tape<S>& t, int id) {
    t.grad(pa).array() += t.grad(id)[0] / S(n);
  });
}

template <typename S>
Var<S> mse(Var<S> a, Var<S> b) {
  check_same_shape(a, b, "mse");
  int n = a.numel();
  S v = (a.val().array() - b.val().array()).square().sum() / S(n);
  int pa = a.id, pb = b.id;
  return a.tape->op(Tensor<S>::scalar(v), {pa, pb}, [pa, pb, n](Tape<S>& t, int id) {
    S g = t.grad(id)[0] * S(2) / S(n);
    auto diff = (t.value(pa).array() - t.value(pb).array()).eval();
    if (t.needs_grad(pa)) t.grad(pa).array() += g * diff;
    if (t.needs_grad(pb)) t.grad(pb).array() -= g * diff;
  });
}

template <typename S>
Var<S> masked_sse(Var<S> a, Var<S> b, Tensor<S> w) {
  check_same_shape(a, b, "masked_sse");
  check(a.val().shape() == w.shape(), "shape_mismatch", "masked_sse weights");
  S v = (w.array() * (a.val().array() - b.val().array()).square()).sum();
  int pa = a.id, pb = b.id;
  auto wp = std::make_shared<Tensor<S>>(std::move(w));
  return a.tape->op(Tensor<S>::scalar(v), {pa, pb}, [pa, pb, wp](Tape<S>& t, int id) {
    S g = t.grad(id)[0] * S(2);
    auto diff = (wp->array() * (t.value(pa).array() - t.value(pb).array())).eval();
    if (t.needs_grad(pa)) t.grad(pa).array() += g * diff;
    if (t.needs_grad(pb)) t.grad(pb).array() -= g * diff;
  });
}

template <typename S>
Var<S> cross_entropy(Var<S> logits, const std::vector<int>& targets) {
  const Tensor<S>& x = logits.val();
  check(x.ndim() == 2, "bad_shape", "cross_entropy expects [N,K]");
  int n = x.dim(0), k = x.dim(1);
  check(int(targets.size()) == n, "shape_mismatch", "cross_entropy targets");
  S loss = 0;
  for (int i = 0; i < n; ++i) {
    const S* row = x.data() + i * k;
    S mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    S se = 0;
    for (int j = 0; j < k; ++j) se += std::exp(row[j] - mx);
    loss += (std::log(se) + mx) - row[targets[size_t(i)]];
  }
  loss /= S(n);
  int pl = logits.id;
  auto tgt = std::make_shared<std::vector<int>>(targets);
  return logits.tape->op(Tensor<S>::scalar(loss), {pl}, [pl, tgt, n, k](Tape<S>& t, int id) {
    S g = t.grad(id)[0] / S(n);
    const Tensor<S>& x = t.value(pl);
    Tensor<S>& dx = t.grad(pl);
    for (int i = 0; i < n; ++i) {
      const S* row = x.data() + i * k;
      S* drow = dx.data() + i * k;
      S mx = row[0];
      for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
      S se = 0;
      for (int j = 0; j < k; ++j) se += std::exp(row[j] - mx);
      for (int j = 0; j < k; ++j) drow[j] += g * std::exp(row[j] - mx) / se;
      drow[(*tgt)[size_t(i)]] -= g;
    }
  });
}

// ---------------- shape ----------------

template <typename S>
Var<S> reshape(Var<S> a, std::vector<int> shape) {
  Tensor<S> v = a.val().reshaped(shape);
  int pa = a.id;
  return a.tape->op(std::move(v), {pa}, [pa](Tape<S>& t, int id) {
    t.grad(pa).array() += t.grad(id).array();
  });
}

template <typename S>
Var<S> concat_ch(Var<S> a, Var<S> b) {
  const Tensor<S>& x = a.val();
  const Tensor<S>& y = b.val();
  check(x.ndim() == 4 && y.ndim() == 4 && x.dim(0) == y.dim(0) && x.dim(2) == y.dim(2) &&
            x.dim(3) == y.dim(3),
        "shape_mismatch", "concat_ch");
  int n = x.dim(0), ca = x.dim(1), cb = y.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor<S> v({n, ca + cb, h, w});
  int plane = h * w;
  for (int i = 0; i < n; ++i) {
    std::copy(x.data() + i * ca * plane, x.data() + (i + 1) * ca * plane,
              v.data() + i * (ca + cb) * plane);
    std::copy(y.data() + i * cb * plane, y.data() + (i + 1) * cb * plane,
              v.data() + i * (ca + cb) * plane + ca * plane);
  }
  int pa = a.id, pb = b.id;
  return a.tape->op(std::move(v), {pa, pb}, [pa, pb, n, ca, cb, plane](Tape<S>& t, int id) {
    const Tensor<S>& g = t.grad(id);
    for (int i = 0; i < n; ++i) {
      if (t.needs_grad(pa)) {
        S* da = t.grad(pa).data() + i * ca * plane;
        const S* gp = g.data() + i * (ca + cb) * plane;
        for (int j = 0; j < ca * plane; ++j) da[j] += gp[j];
      }
      if (t.needs_grad(pb)) {
        S* db = t.grad(pb).data() + i * cb * plane;
        const S* gp = g.data() + i * (ca + cb) * plane + ca * plane;
        for (int j = 0; j < cb * plane; ++j) db[j] += gp[j];
      }
    }
  });
}

template <typename S>
Var<S> nchw_to_ntc(Var<S> a) {
  const Tensor<S>& x = a.val();
  check(x.ndim() == 4, "bad_shape", "nchw_to_ntc");
  int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  int hw = h * w;
  Tensor<S> v({n, hw, c});
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      const S* src = x.data() + (i * c + ch) * hw;
      S* dst = v.data() + i * hw * c + ch;
      for (int p = 0; p < hw; ++p) dst[p * c] = src[p];
    }
  int pa = a.id;
  return a.tape->op(std::move(v), {pa}, [pa, n, c, hw](Tape<S>& t, int id) {
    const Tensor<S>& g = t.grad(id);
    Tensor<S>& dx = t.grad(pa);
    for (int i = 0; i < n; ++i)
      for (int ch = 0; ch < c; ++ch) {
        S* dst = dx.data() + (i * c + ch) * hw;
        const S* src = g.data() + i * hw * c + ch;
        for (int p = 0; p < hw; ++p) dst[p] += src[p * c];
      }
  });
}

template <typename S>
Var<S> ntc_to_nchw(Var<S> a, int h, int w) {
  const Tensor<S>& x = a.val();
  check(x.ndim() == 3 && x.dim(1) == h * w, "bad_shape", "ntc_to_nchw");
  int n = x.dim(0), c = x.dim(2);
  int hw = h * w;
  Tensor<S> v({n, c, h, w});
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      S* dst = v.data() + (i * c + ch) * hw;
      const S* src = x.data() + i * hw * c + ch;
      for (int p = 0; p < hw; ++p) dst[p] = src[p * c];
    }
  int pa = a.id;
  return a.tape->op(std::move(v), {pa}, [pa, n, c, hw](Tape<S>& t, int id) {
    const Tensor<S>& g = t.grad(id);
    Tensor<S>& dx = t.grad(pa);
    for (int i = 0; i < n; ++i)
      for (int ch = 0; ch < c; ++ch) {
        const S* src = g.data() + (i * c + ch) * hw;
        S* dst = dx.data() + i * hw * c + ch;
        for (int p = 0; p < hw; ++p) dst[p * c] += src[p];
      }
  });
}

template <typename S>
Var<S> stack0(const std::vector<Var<S>>& xs) {
  check(!xs.empty(), "bad_shape", "stack0 of nothing");
  Tape<S>* tape = xs[0].tape;
  std::vector<int> shape = xs[0].shape();
  int per = xs[0].numel();
  std::vector<int> parents;
  std::vector<int> out_shape;
  out_shape.push_back(int(xs.size()));
  for (int d : shape) out_shape.push_back(d);
  Tensor<S> v(out_shape);
  for (size_t i = 0; i < xs.size(); ++i) {
    check(xs[i].shape() == shape, "shape_mismatch", "stack0");
    std::copy(xs[i].val().data(), xs[i].val().data() + per, v.data() + int(i) * per);
    parents.push_back(xs[i].id);
  }
  auto ps = std::make_shared<std::vector<int>>(parents);
  return tape->op(std::move(v), std::move(parents), [ps, per](Tape<S>& t, int id) {
    const Tensor<S>& g = t.grad(id);
    for (size_t i = 0; i < ps->size(); ++i) {
      int p = (*ps)[i];
      if (!t.needs_grad(p)) continue;
      S* dst = t.grad(p).data();
      const S* src = g.data() + int(i) * per;
      for (int j = 0; j < per; ++j) dst[j] += src[j];
    }
  });
}

template <typename S>
Var<S> pad_rows(Var<S> a, int rows) {
  const Tensor<S>& x = a.val();
  check(x.ndim() == 2 && x.dim(0) <= rows, "bad_shape", "pad_rows");
  int t0 = x.dim(0), d = x.dim(1);
  Tensor<S> v({rows, d});
  std::copy(x.data(), x.data() + t0 * d, v.data());
  int pa = a.id;
  return a.tape->op(std::move(v), {pa}, [pa, t0, d](Tape<S>& t, int id) {
    const Tensor<S>& g = t.grad(id);
    S* dst = t.grad(pa).data();
    for (int j = 0; j < t0 * d; ++j) dst[j] += g.data()[j];
  });
}

// ---------------- linear algebra ----------------

template <typename S>
Var<S> matmul(Var<S> a, Var<S> b) {
  const Tensor<S>& x = a.val();
  const Tensor<S>& y = b.val();
  check(x.ndim() == 2 && y.ndim() == 2 && x.dim(1) == y.dim(0), "shape_mismatch", "matmul");
  int m = x.dim(0), k = x.dim(1), n = y.dim(1);
  Tensor<S> v({m, n});
  v.mat(m, n).noalias() = x.mat(m, k) * y.mat(k, n);
  int pa = a.id, pb = b.id;
  return a.tape->op(std::move(v), {pa, pb}, [pa, pb, m, k, n](Tape<S>& t, int id) {
    auto g = t.grad(id).mat(m, n);
    if (t.needs_grad(pa))
      t.grad(pa).mat(m, k).noalias() += g * t.value(pb).mat(k, n).transpose();
    if (t.needs_grad(pb))
      t.grad(pb).mat(k, n).noalias() += t.value(pa).mat(m, k).transpose() * g;
  });
}

template <typename S>
Var<S> bmm(Var<S> a, Var<S> b, bool ta, bool tb) {
  const Tensor<S>& x = a.val();
  const Tensor<S>& y = b.val();
  check(x.ndim() == 3 && y.ndim() == 3 && x.dim(0) == y.dim(0), "shape_mismatch", "bmm");
  int bs = x.dim(0);
  int m = ta ? x.dim(2) : x.dim(1);
  int k = ta ? x.dim(1) : x.dim(2);
  int k2 = tb ? y.dim(2) : y.dim(1);
  int n = tb ? y.dim(1) : y.dim(2);
  check(k == k2, "shape_mismatch", "bmm inner");
  Tensor<S> v({bs, m, n});
  for (int i = 0; i < bs; ++i) {
    ConstMatMap<S> xm(x.data() + i * x.dim(1) * x.dim(2), x.dim(1), x.dim(2));
    ConstMatMap<S> ym(y.data() + i * y.dim(1) * y.dim(2), y.dim(1), y.dim(2));
    MatMap<S> vm(v.data() + i * m * n, m, n);
    if (!ta && !tb) vm.noalias() = xm * ym;
    else if (ta && !tb) vm.noalias() = xm.transpose() * ym;
    else if (!ta && tb) vm.noalias() = xm * ym.transpose();
    else vm.noalias() = xm.transpose() * ym.transpose();
  }
  int pa = a.id, pb = b.id;
  int xr = x.dim(1), xc = x.dim(2), yr = y.dim(1), yc = y.dim(2);
  return a.tape->op(std::move(v), {pa, pb},
                    [pa, pb, bs, m, n, xr, xc, yr, yc, ta, tb](Tape<S>& t, int id) {
    for (int i = 0; i < bs; ++i) {
      ConstMatMap<S> g(t.grad(id).data() + i * m * n, m, n);
      ConstMatMap<S> xm(t.value(pa).data() + i * xr * xc, xr, xc);
      ConstMatMap<S> ym(t.value(pb).data() + i * yr * yc, yr, yc);
      if (t.needs_grad(pa)) {
        MatMap<S> dx(t.grad(pa).data() + i * xr * xc, xr, xc);
        if (!ta && !tb) dx.noalias() += g * ym.transpose();
        else if (ta && !tb) dx.noalias() += ym * g.transpose();
        else if (!ta && tb) dx.noalias() += g * ym;
        else dx.noalias() += ym.transpose() * g.transpose();
      }
      if (t.needs_grad(pb)) {
        MatMap<S> dy(t.grad(pb).data() + i * yr * yc, yr, yc);
        if (!ta && !tb) dy.noalias() += xm.transpose() * g;
        else if (ta && !tb) dy.noalias() += xm * g;
        else if (!ta && tb) dy.noalias() += g.transpose() * xm;
        else dy.noalias() += g.transpose() * xm.transpose();
      }
    }
  });
}

template <typename S>
Var<S> add_rowvec(Var<S> a, Var<S> b) {
  const Tensor<S>& x = a.val();
  const Tensor<S>& y = b.val();
  int d = y.numel();
  check(x.numel() % d == 0, "shape_mismatch", "add_rowvec");
  int rows = x.numel() / d;
  Tensor<S> v = x;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < d; ++j) v.data()[i * d + j] += y.data()[j];
  int pa = a.id, pb = b.id;
  return a.tape->op(std::move(v), {pa, pb}, [pa, pb, rows, d](Tape<S>& t, int id) {
    const Tensor<S>& g = t.grad(id);
    t.accumulate(pa, g);
    if (t.needs_grad(pb)) {
      S* db = t.grad(pb).data();
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < d; ++j) db[j] += g.data()[i * d + j];
    }
  });
}

// ---------------- spatial ----------------

namespace {

// Gather convolution patches: out is [n*oh*ow, c*kh*kw].
template <typename S>
void im2col(const Tensor<S>& x, int kh, int kw, int stride, int pad, int oh, int ow,
            Tensor<S>& patches) {
  int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  int ckk = c * kh * kw;
  S* out = patches.data();
  for (int i = 0; i < n; ++i)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        S* row = out + ((i * oh + oy) * ow + ox) * ckk;
        int iy0 = oy * stride - pad;
        int ix0 = ox * stride - pad;
        for (int ch = 0; ch < c; ++ch) {
          const S* src = x.data() + (i * c + ch) * h * w;
          for (int ky = 0; ky < kh; ++ky) {
            int iy = iy0 + ky;
            S* dst = row + (ch * kh + ky) * kw;
            if (iy < 0 || iy >= h) {
              for (int kx = 0; kx < kw; ++kx) dst[kx] = S(0);
              continue;
            }
            for (int kx = 0; kx < kw; ++kx) {
              int ix = ix0 + kx;
              dst[kx] = (ix >= 0 && ix < w) ? src[iy * w + ix] : S(0);
            }
          }
        }
      }
}

// Scatter-add patch gradients back to the input layout.
template <typename S>
void col2im(const Tensor<S>& patches, int n, int c, int h, int w, int kh, int kw, int stride,
            int pad, int oh, int ow, Tensor<S>& dx) {
  int ckk = c * kh * kw;
  for (int i = 0; i < n; ++i)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const S* row = patches.data() + ((i * oh + oy) * ow + ox) * ckk;
        int iy0 = oy * stride - pad;
        int ix0 = ox * stride - pad;
        for (int ch = 0; ch < c; ++ch) {
          S* dst = dx.data() + (i * c + ch) * h * w;
          for (int ky = 0; ky < kh; ++ky) {
            int iy = iy0 + ky;
            if (iy < 0 || iy >= h) continue;
            const S* src = row + (ch * kh + ky) * kw;
            for (int kx = 0; kx < kw; ++kx) {
              int ix = ix0 + kx;
              if (ix >= 0 && ix < w) dst[iy * w + ix] += src[kx];
            }
          }
        }
      }
}

}  // namespace

template <typename S>
Var<S> conv2d(Var<S> a, Var<S> w, Var<S> b, int stride, int pad) {
  const Tensor<S>& x = a.val();
  const Tensor<S>& wt = w.val();
  check(x.ndim() == 4 && wt.ndim() == 4 && x.dim(1) == wt.dim(1), "shape_mismatch", "conv2d");
  int n = x.dim(0), c = x.dim(1), h = x.dim(2), ww = x.dim(3);
  int co = wt.dim(0), kh = wt.dim(2), kw = wt.dim(3);
  int oh = (h + 2 * pad - kh) / stride + 1;
  int ow = (ww + 2 * pad - kw) / stride + 1;
  check(oh > 0 && ow > 0, "bad_shape", "conv2d output empty");
  int ckk = c * kh * kw;
  int rows = n * oh * ow;

  Tensor<S> patches({rows, ckk});
  im2col(x, kh, kw, stride, pad, oh, ow, patches);
  Tensor<S> outm({rows, co});
  outm.mat(rows, co).noalias() = patches.mat(rows, ckk) * wt.mat(co, ckk).transpose();

  Tensor<S> v({n, co, oh, ow});
  const bool has_bias = b.valid();
  const S* bias = has_bias ? b.val().data() : nullptr;
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < co; ++ch) {
      S* dst = v.data() + (i * co + ch) * oh * ow;
      const S* src = outm.data() + (i * oh * ow) * co + ch;
      S add = has_bias ? bias[ch] : S(0);
      for (int p = 0; p < oh * ow; ++p) dst[p] = src[p * co] + add;
    }

  std::vector<int> parents = {a.id, w.id};
  if (has_bias) parents.push_back(b.id);
  int pa = a.id, pw = w.id, pb = has_bias ? b.id : -1;
  return a.tape->op(std::move(v), std::move(parents),
                    [pa, pw, pb, n, c, h, ww, co, kh, kw, stride, pad, oh, ow,
                     ckk](Tape<S>& t, int id) {
    int rows = n * oh * ow;
    const Tensor<S>& g = t.grad(id);
    // regather grad as [rows, co]
    Tensor<S> gm({rows, co});
    for (int i = 0; i < n; ++i)
      for (int ch = 0; ch < co; ++ch) {
        const S* src = g.data() + (i * co + ch) * oh * ow;
        S* dst = gm.data() + (i * oh * ow) * co + ch;
        for (int p = 0; p < oh * ow; ++p) dst[p * co] = src[p];
      }
    if (pb >= 0 && t.needs_grad(pb)) {
      S* db = t.grad(pb).data();
      for (int r = 0; r < rows; ++r)
        for (int ch = 0; ch < co; ++ch) db[ch] += gm.data()[r * co + ch];
    }
    const bool want_dx = t.needs_grad(pa);
    const bool want_dw = t.needs_grad(pw);
    if (!want_dx && !want_dw) return;
    if (want_dw) {
      Tensor<S> patches({rows, ckk});
      im2col(t.value(pa), kh, kw, stride, pad, oh, ow, patches);
      t.grad(pw).mat(co, ckk).noalias() +=
          gm.mat(rows, co).transpose() * patches.mat(rows, ckk);
    }
    if (want_dx) {
      Tensor<S> dpatches({rows, ckk});
      dpatches.mat(rows, ckk).noalias() = gm.mat(rows, co) * t.value(pw).mat(co, ckk);
      col2im(dpatches, n, c, h, ww, kh, kw, stride, pad, oh, ow, t.grad(pa));
    }
  });
}

template <typename S>
Var<S> upsample_nearest2(Var<S> a) {
  const Tensor<S>& x = a.val();
  check(x.ndim() == 4, "bad_shape", "upsample_nearest2");
  int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor<S> v({n, c, h * 2, w * 2});
  for (int i = 0; i < n * c; ++i) {
    const S* src = x.data() + i * h * w;
    S* dst = v.data() + i * h * w * 4;
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        S s = src[y * w + xx];
        dst[(2 * y) * 2 * w + 2 * xx] = s;
        dst[(2 * y) * 2 * w + 2 * xx + 1] = s;
        dst[(2 * y + 1) * 2 * w + 2 * xx] = s;
        dst[(2 * y + 1) * 2 * w + 2 * xx + 1] = s;
      }
  }
  int pa = a.id;
  return a.tape->op(std::move(v), {pa}, [pa, n, c, h, w](Tape<S>& t, int id) {
    const Tensor<S>& g = t.grad(id);
    Tensor<S>& dx = t.grad(pa);
    for (int i = 0; i < n * c; ++i) {
      S* dst = dx.data() + i * h * w;
      const S* src = g.data() + i * h * w * 4;
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx)
          dst[y * w + xx] += src[(2 * y) * 2 * w + 2 * xx] + src[(2 * y) * 2 * w + 2 * xx + 1] +
                             src[(2 * y + 1) * 2 * w + 2 * xx] +
                             src[(2 * y + 1) * 2 * w + 2 * xx + 1];
    }
  });
}

template <typename S>
Var<S> avgpool_all(Var<S> a) {
  const Tensor<S>& x = a.val();
  check(x.ndim() == 4, "bad_shape", "avgpool_all");
  int n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor<S> v({n, c});
  for (int i = 0; i < n * c; ++i) {
    const S* src = x.data() + i * hw;
    S s = 0;
    for (int p = 0; p < hw; ++p) s += src[p];
    v.data()[i] = s / S(hw);
  }
  int pa = a.id;
  return a.tape->op(std::move(v), {pa}, [pa, n, c, hw](Tape<S>& t, int id) {
    const Tensor<S>& g = t.grad(id);
    Tensor<S>& dx = t.grad(pa);
    for (int i = 0; i < n * c; ++i) {
      S gv = g.data()[i] / S(hw);
      S* dst = dx.data() + i * hw;
      for (int p = 0; p < hw; ++p) dst[p] += gv;
    }
  });
}

template <typename S>
Var<S> slot_pool(Var<S> a, int slots) {
  const Tensor<S>& x = a.val();
  check(x.ndim() == 4 && x.dim(3) % slots == 0, "bad_shape", "slot_pool");
  int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  int sw = w / slots;
  Tensor<S> v({n, slots, c});
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      const S* src = x.data() + (i * c + ch) * h * w;
      for (int s = 0; s < slots; ++s) {
        S acc = 0;
        for (int y = 0; y < h; ++y)
          for (int xx = s * sw; xx < (s + 1) * sw; ++xx) acc += src[y * w + xx];
        v.data()[(i * slots + s) * c + ch] = acc / S(h * sw);
      }
    }
  int pa = a.id;
  return a.tape->op(std::move(v), {pa}, [pa, n, c, h, w, slots, sw](Tape<S>& t, int id) {
    const Tensor<S>& g = t.grad(id);
    Tensor<S>& dx = t.grad(pa);
    for (int i = 0; i < n; ++i)
      for (int ch = 0; ch < c; ++ch) {
        S* dst = dx.data() + (i * c + ch) * h * w;
        for (int s = 0; s < slots; ++s) {
          S gv = g.data()[(i * slots + s) * c + ch] / S(h * sw);
          for (int y = 0; y < h; ++y)
            for (int xx = s * sw; xx < (s + 1) * sw; ++xx) dst[y * w + xx] += gv;
        }
      }
  });
}

template <typename S>
Var<S> add_channel_bias(Var<S> a, Var<S> b) {
  const Tensor<S>& x = a.val();
  const Tensor<S>& y = b.val();
  check(x.ndim() == 4 && y.ndim() == 2 && x.dim(0) == y.dim(0) && x.dim(1) == y.dim(1),
        "shape_mismatch", "add_channel_bias");
  int n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor<S> v = x;
  for (int i = 0; i < n * c; ++i) {
    S add = y.data()[i];
    S* dst = v.data() + i * hw;
    for (int p = 0; p < hw; ++p) dst[p] += add;
  }
  int pa = a.id, pb = b.id;
  return a.tape->op(std::move(v), {pa, pb}, [pa, pb, n, c, hw](Tape<S>& t, int id) {
    const Tensor<S>& g = t.grad(id);
    t.accumulate(pa, g);
    if (t.needs_grad(pb)) {
      S* db = t.grad(pb).data();
      for (int i = 0; i < n * c; ++i) {
        const S* src = g.data() + i * hw;
        S s = 0;
        for (int p = 0; p < hw; ++p) s += src[p];
        db[i] += s;
      }
    }
  });
}

template <typename S>
Var<S> group_norm(Var<S> a, int groups, Var<S> gamma, Var<S> beta, S eps) {
  const Tensor<S>& x = a.val();
  check(x.ndim() == 4 && x.dim(1) % groups == 0, "bad_shape", "group_norm");
  int n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  int cg = c / groups;
  int gsize = cg * hw;
  Tensor<S> v(x.shape());
  const S* gm = gamma.val().data();
  const S* bt = beta.val().data();
  for (int i = 0; i < n; ++i)
    for (int g = 0; g < groups; ++g) {
      const S* src = x.data() + (i * c + g * cg) * hw;
      S mean = 0;
      for (int p = 0; p < gsize; ++p) mean += src[p];
      mean /= S(gsize);
      S var = 0;
      for (int p = 0; p < gsize; ++p) {
        S d = src[p] - mean;
        var += d * d;
      }
      var /= S(gsize);
      S inv = S(1) / std::sqrt(var + eps);
      S* dst = v.data() + (i * c + g * cg) * hw;
      for (int ch = 0; ch < cg; ++ch) {
        S ga = gm[g * cg + ch], be = bt[g * cg + ch];
        for (int p = 0; p < hw; ++p)
          dst[ch * hw + p] = (src[ch * hw + p] - mean) * inv * ga + be;
      }
    }
  int pa = a.id, pg = gamma.id, pb = beta.id;
  return a.tape->op(std::move(v), {pa, pg, pb},
                    [pa, pg, pb, n, c, hw, groups, cg, gsize, eps](Tape<S>& t, int id) {
    const Tensor<S>& x = t.value(pa);
    const Tensor<S>& g = t.grad(id);
    const S* gm = t.value(pg).data();
    for (int i = 0; i < n; ++i)
      for (int grp = 0; grp < groups; ++grp) {
        const S* src = x.data() + (i * c + grp * cg) * hw;
        const S* go = g.data() + (i * c + grp * cg) * hw;
        S mean = 0;
        for (int p = 0; p < gsize; ++p) mean += src[p];
        mean /= S(gsize);
        S var = 0;
        for (int p = 0; p < gsize; ++p) {
          S d = src[p] - mean;
          var += d * d;
        }
        var /= S(gsize);
        S inv = S(1) / std::sqrt(var + eps);
        // dgamma/dbeta
        if (t.needs_grad(pg) || t.needs_grad(pb)) {
          for (int ch = 0; ch < cg; ++ch) {
            S dg = 0, db = 0;
            for (int p = 0; p < hw; ++p) {
              S xh = (src[ch * hw + p] - mean) * inv;
              dg += go[ch * hw + p] * xh;
              db += go[ch * hw + p];
            }
            if (t.needs_grad(pg)) t.grad(pg).data()[grp * cg + ch] += dg;
            if (t.needs_grad(pb)) t.grad(pb).data()[grp * cg + ch] += db;
          }
        }
        if (t.needs_grad(pa)) {
          // dx = inv * (dy*gamma - mean(dy*gamma) - xhat*mean(dy*gamma*xhat))
          S sum_dy = 0, sum_dyx = 0;
          for (int ch = 0; ch < cg; ++ch) {
            S ga = gm[grp * cg + ch];
            for (int p = 0; p < hw; ++p) {
              S dy = go[ch * hw + p] * ga;
              S xh = (src[ch * hw + p] - mean) * inv;
              sum_dy += dy;
              sum_dyx += dy * xh;
            }
          }
          sum_dy /= S(gsize);
          sum_dyx /= S(gsize);
          S* dx = t.grad(pa).data() + (i * c + grp * cg) * hw;
          for (int ch = 0; ch < cg; ++ch) {
            S ga = gm[grp * cg + ch];
            for (int p = 0; p < hw; ++p) {
              S dy = go[ch * hw + p] * ga;
              S xh = (src[ch * hw + p] - mean) * inv;
              dx[ch * hw + p] += inv * (dy - sum_dy - xh * sum_dyx);
            }
          }
        }
      }
  });
}

template <typename S>
Var<S> layer_norm(Var<S> a, Var<S> gamma, Var<S> beta, S eps) {
  const Tensor<S>& x = a.val();
  int d = gamma.numel();
  check(x.numel() % d == 0, "shape_mismatch", "layer_norm");
  int rows = x.numel() / d;
  Tensor<S> v(x.shape());
  const S* gm = gamma.val().data();
  const S* bt = beta.val().data();
  for (int i = 0; i < rows; ++i) {
    const S* src = x.data() + i * d;
    S mean = 0;
    for (int j = 0; j < d; ++j) mean += src[j];
    mean /= S(d);
    S var = 0;
    for (int j = 0; j < d; ++j) {
      S dv = src[j] - mean;
      var += dv * dv;
    }
    var /= S(d);
    S inv = S(1) / std::sqrt(var + eps);
    S* dst = v.data() + i * d;
    for (int j = 0; j < d; ++j) dst[j] = (src[j] - mean) * inv * gm[j] + bt[j];
  }
  int pa = a.id, pg = gamma.id, pb = beta.id;
  return a.tape->op(std::move(v), {pa, pg, pb}, [pa, pg, pb, rows, d, eps](Tape<S>& t, int id) {
    const Tensor<S>& x = t.value(pa);
    const Tensor<S>& g = t.grad(id);
    const S* gm = t.value(pg).data();
    for (int i = 0; i < rows; ++i) {
      const S* src = x.data() + i * d;
      const S* go = g.data() + i * d;
      S mean = 0;
      for (int j = 0; j < d; ++j) mean += src[j];
      mean /= S(d);
      S var = 0;
      for (int j = 0; j < d; ++j) {
        S dv = src[j] - mean;
        var += dv * dv;
      }
      var /= S(d);
      S inv = S(1) / std::sqrt(var + eps);
      if (t.needs_grad(pg) || t.needs_grad(pb)) {
        for (int j = 0; j < d; ++j) {
          S xh = (src[j] - mean) * inv;
          if (t.needs_grad(pg)) t.grad(pg).data()[j] += go[j] * xh;
          if (t.needs_grad(pb)) t.grad(pb).data()[j] += go[j];
        }
      }
      if (t.needs_grad(pa)) {
        S sum_dy = 0, sum_dyx = 0;
        for (int j = 0; j < d; ++j) {
          S dy = go[j] * gm[j];
          S xh = (src[j] - mean) * inv;
          sum_dy += dy;
          sum_dyx += dy * xh;
        }
        sum_dy /= S(d);
        sum_dyx /= S(d);
        S* dx = t.grad(pa).data() + i * d;
        for (int j = 0; j < d; ++j) {
          S dy = go[j] * gm[j];
          S xh = (src[j] - mean) * inv;
          dx[j] += inv * (dy - sum_dy - xh * sum_dyx);
        }
      }
    }
  });
}

template <typename S>
Var<S> softmax_last(Var<S> a) {
  const Tensor<S>& x = a.val();
  int d = x.dim(x.ndim() - 1);
  int rows = x.numel() / d;
  Tensor<S> v(x.shape());
  for (int i = 0; i < rows; ++i) {
    const S* src = x.data() + i * d;
    S* dst = v.data() + i * d;
    S mx = src[0];
    for (int j = 1; j < d; ++j) mx = std::max(mx, src[j]);
    S sum = 0;
    for (int j = 0; j < d; ++j) {
      dst[j] = std::exp(src[j] - mx);
      sum += dst[j];
    }
    for (int j = 0; j < d; ++j) dst[j] /= sum;
  }
  int pa = a.id;
  return a.tape->op(std::move(v), {pa}, [pa, rows, d](Tape<S>& t, int id) {
    const Tensor<S>& y = t.value(id);
    const Tensor<S>& g = t.grad(id);
    Tensor<S>& dx = t.grad(pa);
    for (int i = 0; i < rows; ++i) {
      const S* yv = y.data() + i * d;
      const S* gv = g.data() + i * d;
      S dot = 0;
      for (int j = 0; j < d; ++j) dot += yv[j] * gv[j];
      S* dst = dx.data() + i * d;
      for (int j = 0; j < d; ++j) dst[j] += yv[j] * (gv[j] - dot);
    }
  });
}

template <typename S>
Var<S> channel_weighted_sum(Var<S> a, const std::vector<S>& w) {
  const Tensor<S>& x = a.val();
  check(x.ndim() == 3 && x.dim(0) == int(w.size()), "bad_shape", "channel_weighted_sum");
  int c = x.dim(0), hw = x.dim(1) * x.dim(2);
  Tensor<S> v({1, x.dim(1), x.dim(2)});
  for (int p = 0; p < hw; ++p) {
    S s = 0;
    for (int ch = 0; ch < c; ++ch) s += w[size_t(ch)] * x.data()[ch * hw + p];
    v.data()[p] = s;
  }
  int pa = a.id;
  auto ws = std::make_shared<std::vector<S>>(w);
  return a.tape->op(std::move(v), {pa}, [pa, ws, c, hw](Tape<S>& t, int id) {
    const Tensor<S>& g = t.grad(id);
    Tensor<S>& dx = t.grad(pa);
    for (int ch = 0; ch < c; ++ch) {
      S wv = (*ws)[size_t(ch)];
      for (int p = 0; p < hw; ++p) dx.data()[ch * hw + p] += wv * g.data()[p];
    }
  });
}

template <typename S>
Var<S> affine_sample(Var<S> a, const std::array<S, 6>& m, int out_h, int out_w) {
  const Tensor<S>& img = a.val();
  check(img.ndim() == 3, "bad_shape", "affine_sample expects [C,H,W]");
  int c = img.dim(0), h = img.dim(1), w = img.dim(2);
  Tensor<S> v({c, out_h, out_w});
  auto sample = [&](auto&& fn) {
    for (int i = 0; i < out_h; ++i)
      for (int j = 0; j < out_w; ++j) {
        S sx = m[0] * (S(j) + S(0.5)) + m[1] * (S(i) + S(0.5)) + m[2] - S(0.5);
        S sy = m[3] * (S(j) + S(0.5)) + m[4] * (S(i) + S(0.5)) + m[5] - S(0.5);
        int x0 = int(std::floor(sx)), y0 = int(std::floor(sy));
        S fx = sx - S(x0), fy = sy - S(y0);
        const std::array<std::pair<int, int>, 4> corners = {
            std::pair{x0, y0}, {x0 + 1, y0}, {x0, y0 + 1}, {x0 + 1, y0 + 1}};
        const std::array<S, 4> wts = {(S(1) - fx) * (S(1) - fy), fx * (S(1) - fy),
                                      (S(1) - fx) * fy, fx * fy};
        for (int k = 0; k < 4; ++k) {
          auto [xx, yy] = corners[size_t(k)];
          if (xx < 0 || xx >= w || yy < 0 || yy >= h) continue;
          fn(i, j, xx, yy, wts[size_t(k)]);
        }
      }
  };
  sample([&](int i, int j, int xx, int yy, S wt) {
    for (int ch = 0; ch < c; ++ch)
      v.data()[(ch * out_h + i) * out_w + j] += wt * img.data()[(ch * h + yy) * w + xx];
  });
  int pa = a.id;
  auto mm = std::make_shared<std::array<S, 6>>(m);
  return a.tape->op(std::move(v), {pa}, [pa, mm, c, h, w, out_h, out_w](Tape<S>& t, int id) {
    const Tensor<S>& g = t.grad(id);
    Tensor<S>& dx = t.grad(pa);
    const auto& m = *mm;
    for (int i = 0; i < out_h; ++i)
      for (int j = 0; j < out_w; ++j) {
        S sx = m[0] * (S(j) + S(0.5)) + m[1] * (S(i) + S(0.5)) + m[2] - S(0.5);
        S sy = m[3] * (S(j) + S(0.5)) + m[4] * (S(i) + S(0.5)) + m[5] - S(0.5);
        int x0 = int(std::floor(sx)), y0 = int(std::floor(sy));
        S fx = sx - S(x0), fy = sy - S(y0);
        const std::array<std::pair<int, int>, 4> corners = {
            std::pair{x0, y0}, {x0 + 1, y0}, {x0, y0 + 1}, {x0 + 1, y0 + 1}};
        const std::array<S, 4> wts = {(S(1) - fx) * (S(1) - fy), fx * (S(1) - fy),
                                      (S(1) - fx) * fy, fx * fy};
        for (int k = 0; k < 4; ++k) {
          auto [xx, yy] = corners[size_t(k)];
          if (xx < 0 || xx >= w || yy < 0 || yy >= h) continue;
          for (int ch = 0; ch < c; ++ch)
            dx.data()[(ch * h + yy) * w + xx] +=
                wts[size_t(k)] * g.data()[(ch * out_h + i) * out_w + j];
        }
      }
  });
}

// ---------------- attention head reshuffles ----------------

template <typename S>
Var<S> split_heads(Var<S> a, int heads) {
  const Tensor<S>& x = a.val();
  check(x.ndim() == 3 && x.dim(2) % heads == 0, "bad_shape", "split_heads");
  int n = x.dim(0), tt = x.dim(1), d = x.dim(2);
  int dh = d / heads;
  Tensor<S> v({n * heads, tt, dh});
  for (int i = 0; i < n; ++i)
    for (int hd = 0; hd < heads; ++hd)
      for (int s = 0; s < tt; ++s)
        std::copy(x.data() + (i * tt + s) * d + hd * dh,
                  x.data() + (i * tt + s) * d + (hd + 1) * dh,
                  v.data() + ((i * heads + hd) * tt + s) * dh);
  int pa = a.id;
  return a.tape->op(std::move(v), {pa}, [pa, n, tt, d, dh, heads](Tape<S>& t, int id) {
    const Tensor<S>& g = t.grad(id);
    Tensor<S>& dx = t.grad(pa);
    for (int i = 0; i < n; ++i)
      for (int hd = 0; hd < heads; ++hd)
        for (int s = 0; s < tt; ++s) {
          const S* src = g.data() + ((i * heads + hd) * tt + s) * dh;
          S* dst = dx.data() + (i * tt + s) * d + hd * dh;
          for (int j = 0; j < dh; ++j) dst[j] += src[j];
        }
  });
}

template <typename S>
Var<S> merge_heads(Var<S> a, int heads) {
  const Tensor<S>& x = a.val();
  check(x.ndim() == 3 && x.dim(0) % heads == 0, "bad_shape", "merge_heads");
  int n = x.dim(0) / heads, tt = x.dim(1), dh = x.dim(2);
  int d = dh * heads;
  Tensor<S> v({n, tt, d});
  for (int i = 0; i < n; ++i)
    for (int hd = 0; hd < heads; ++hd)
      for (int s = 0; s < tt; ++s)
        std::copy(x.data() + ((i * heads + hd) * tt + s) * dh,
                  x.data() + ((i * heads + hd) * tt + s + 1) * dh,
                  v.data() + (i * tt + s) * d + hd * dh);
  int pa = a.id;
  return a.tape->op(std::move(v), {pa}, [pa, n, tt, d, dh, heads](Tape<S>& t, int id) {
    const Tensor<S>& g = t.grad(id);
    Tensor<S>& dx = t.grad(pa);
    for (int i = 0; i < n; ++i)
      for (int hd = 0; hd < heads; ++hd)
        for (int s = 0; s < tt; ++s) {
          const S* src = g.data() + (i * tt + s) * d + hd * dh;
          S* dst = dx.data() + ((i * heads + hd) * tt + s) * dh;
          for (int j = 0; j < dh; ++j) dst[j] += src[j];
        }
  });
}

// ---------------- sequences ----------------

template <typename S>
Var<S> embedding(Var<S> table, const std::vector<int>& ids) {
  const Tensor<S>& tb = table.val();
  check(tb.ndim() == 2, "bad_shape", "embedding table");
  int v = tb.dim(0), d = tb.dim(1);
  Tensor<S> out({int(ids.size()), d});
  for (size_t i = 0; i < ids.size(); ++i) {
    int id = ids[i];
    check(id >= 0 && id < v, "bad_token", "embedding id out of range");
    std::copy(tb.data() + id * d, tb.data() + (id + 1) * d, out.data() + int(i) * d);
  }
  int pt = table.id;
  auto idv = std::make_shared<std::vector<int>>(ids);
  return table.tape->op(std::move(out), {pt}, [pt, idv, d](Tape<S>& t, int id) {
    const Tensor<S>& g = t.grad(id);
    Tensor<S>& dt = t.grad(pt);
    for (size_t i = 0; i < idv->size(); ++i) {
      S* dst = dt.data() + (*idv)[i] * d;
      const S* src = g.data() + int(i) * d;
      for (int j = 0; j < d; ++j) dst[j] += src[j];
    }
  });
}

template <typename S>
Var<S> row_substitute(Var<S> base, Var<S> rows, const std::vector<int>& idx) {
  const Tensor<S>& b = base.val();
  const Tensor<S>& r = rows.val();
  check(b.ndim() == 2 && r.ndim() == 2 && b.dim(1) == r.dim(1) &&
            r.dim(0) == int(idx.size()),
        "shape_mismatch", "row_substitute");
  int d = b.dim(1);
  Tensor<S> v = b;
  for (size_t i = 0; i < idx.size(); ++i) {
    check(idx[i] >= 0 && idx[i] < b.dim(0), "bad_slot", "row_substitute index");
    std::copy(r.data() + int(i) * d, r.data() + int(i + 1) * d, v.data() + idx[i] * d);
  }
  int pb = base.id, pr = rows.id;
  auto idv = std::make_shared<std::vector<int>>(idx);
  return base.tape->op(std::move(v), {pb, pr}, [pb, pr, idv, d](Tape<S>& t, int id) {
    const Tensor<S>& g = t.grad(id);
    if (t.needs_grad(pb)) {
      Tensor<S> gb = g;
      for (int row : *idv)
        for (int j = 0; j < d; ++j) gb.data()[row * d + j] = S(0);
      t.grad(pb).array() += gb.array();
    }
    if (t.needs_grad(pr)) {
      Tensor<S>& dr = t.grad(pr);
      for (size_t i = 0; i < idv->size(); ++i) {
        const S* src = g.data() + (*idv)[i] * d;
        S* dst = dr.data() + int(i) * d;
        for (int j = 0; j < d; ++j) dst[j] += src[j];
      }
    }
  });
}

// ---------------- explicit instantiations ----------------

#define GD_INSTANTIATE_OPS(S)                                                          \
  template Var<S> add(Var<S>, Var<S>);                                                \
  template Var<S> sub(Var<S>, Var<S>);                                                \
  template Var<S> mul(Var<S>, Var<S>);                                                \
  template Var<S> add_scaled(Var<S>, Var<S>, S);                                      \
  template Var<S> scale(Var<S>, S);                                                   \
  template Var<S> add_const(Var<S>, S);                                               \
  template Var<S> square(Var<S>);                                                     \
  template Var<S> exp_op(Var<S>);                                                     \
  template Var<S> silu(Var<S>);                                                       \
  template Var<S> relu(Var<S>);                                                       \
  template Var<S> sigmoid_op(Var<S>);                                                 \
  template Var<S> tanh_op(Var<S>);                                                    \
  template Var<S> mul_tensor_const(Var<S>, Tensor<S>);                                \
  template Var<S> sum_all(Var<S>);                                                    \
  template Var<S> mean_all(Var<S>);                                                   \
  template Var<S> mse(Var<S>, Var<S>);                                                \
  template Var<S> masked_sse(Var<S>, Var<S>, Tensor<S>);                              \
  template Var<S> cross_entropy(Var<S>, const std::vector<int>&);                     \
  template Var<S> reshape(Var<S>, std::vector<int>);                                  \
  template Var<S> concat_ch(Var<S>, Var<S>);                                          \
  template Var<S> nchw_to_ntc(Var<S>);                                                \
  template Var<S> ntc_to_nchw(Var<S>, int, int);                                      \
  template Var<S> stack0(const std::vector<Var<S>>&);                                 \
  template Var<S> pad_rows(Var<S>, int);                                              \
  template Var<S> matmul(Var<S>, Var<S>);                                             \
  template Var<S> bmm(Var<S>, Var<S>, bool, bool);                                    \
  template Var<S> add_rowvec(Var<S>, Var<S>);                                         \
  template Var<S> conv2d(Var<S>, Var<S>, Var<S>, int, int);                           \
  template Var<S> upsample_nearest2(Var<S>);                                          \
  template Var<S> avgpool_all(Var<S>);                                                \
  template Var<S> slot_pool(Var<S>, int);                                             \
  template Var<S> add_channel_bias(Var<S>, Var<S>);                                   \
  template Var<S> group_norm(Var<S>, int, Var<S>, Var<S>, S);                         \
  template Var<S> layer_norm(Var<S>, Var<S>, Var<S>, S);                              \
  template Var<S> softmax_last(Var<S>);                                               \
  template Var<S> channel_weighted_sum(Var<S>, const std::vector<S>&);                \
  template Var<S> affine_sample(Var<S>, const std::array<S, 6>&, int, int);           \
  template Var<S> split_heads(Var<S>, int);                                           \
  template Var<S> merge_heads(Var<S>, int);                                           \
  template Var<S> embedding(Var<S>, const std::vector<int>&);                         \
  template Var<S> row_substitute(Var<S>, Var<S>, const std::vector<int>&);

GD_INSTANTIATE_OPS(float)
GD_INSTANTIATE_OPS(double)

}  // namespace gd
