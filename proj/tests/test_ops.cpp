#include <doctest.h>

#include <functional>

#include "glyphdiff/core/nn.hpp"
#include "glyphdiff/core/ops.hpp"
#include "glyphdiff/core/optim.hpp"

using namespace gd;

namespace {

using BuildFn =
    std::function<Var<double>(Tape<double>&, const std::vector<Var<double>>&)>;

double eval_loss(const BuildFn& build, const std::vector<Tensor<double>>& inputs) {
  Tape<double> tape;
  std::vector<Var<double>> vars;
  for (const auto& t : inputs) vars.push_back(tape.input(Tensor<double>(t), false));
  return build(tape, vars).val()[0];
}

// Central-difference gradient check on a sample of elements per input.
void gradcheck(const BuildFn& build, std::vector<Tensor<double>> inputs, Rng& rng,
               int probes_per_input = 6, double eps = 1e-5, double tol = 1e-6) {
  Tape<double> tape;
  std::vector<Var<double>> vars;
  for (const auto& t : inputs) vars.push_back(tape.input(Tensor<double>(t), true));
  Var<double> loss = build(tape, vars);
  tape.backward(loss);

  for (size_t i = 0; i < inputs.size(); ++i) {
    for (int p = 0; p < probes_per_input; ++p) {
      int j = int(rng.below(uint64_t(inputs[i].numel())));
      double saved = inputs[i][j];
      inputs[i][j] = saved + eps;
      double up = eval_loss(build, inputs);
      inputs[i][j] = saved - eps;
      double dn = eval_loss(build, inputs);
      inputs[i][j] = saved;
      double num = (up - dn) / (2 * eps);
      double ana = tape.grad(vars[i].id)[j];
      double denom = std::max({std::abs(num), std::abs(ana), 1e-4});
      INFO("input ", i, " elem ", j, " numeric ", num, " analytic ", ana);
      CHECK(std::abs(num - ana) / denom < tol * 1e3);  // rel err < 1e-3*tol scale
    }
  }
}

Tensor<double> rnd(std::vector<int> shape, Rng& rng) {
  return Tensor<double>::randn(std::move(shape), rng);
}

}  // namespace

TEST_CASE("elementwise and reduction gradients") {
  Rng rng(7);
  gradcheck(
      [](Tape<double>& t, const std::vector<Var<double>>& v) {
        auto y = add(mul(v[0], v[1]), add_scaled(square(v[0]), silu(v[1]), 0.7));
        y = add(y, mul_tensor_const(tanh_op(v[0]), Tensor<double>::full(v[0].shape(), 0.3)));
        return mean_all(add(sigmoid_op(y), exp_op(scale(v[1], 0.1))));
      },
      {rnd({3, 5}, rng), rnd({3, 5}, rng)}, rng);

  gradcheck(
      [](Tape<double>& t, const std::vector<Var<double>>& v) {
        return add(mse(v[0], v[1]), scale(sum_all(relu(v[0])), 0.01));
      },
      {rnd({4, 3}, rng), rnd({4, 3}, rng)}, rng);
}

TEST_CASE("masked sse matches manual value and gradients") {
  Rng rng(11);
  Tensor<double> w({2, 3});
  for (int i = 0; i < w.numel(); ++i) w[i] = (i % 2 == 0) ? 0.5 : 0.0;
  Tensor<double> a = rnd({2, 3}, rng), b = rnd({2, 3}, rng);
  double expect = 0;
  for (int i = 0; i < a.numel(); ++i) expect += w[i] * (a[i] - b[i]) * (a[i] - b[i]);
  Tape<double> t;
  auto va = t.input(Tensor<double>(a), true);
  auto vb = t.input(Tensor<double>(b), false);
  CHECK(masked_sse(va, vb, w).val()[0] == doctest::Approx(expect));

  gradcheck(
      [&w](Tape<double>& t, const std::vector<Var<double>>& v) {
        return masked_sse(v[0], v[1], Tensor<double>(w));
      },
      {a, b}, rng);
}

TEST_CASE("matmul bmm linear gradients") {
  Rng rng(13);
  gradcheck(
      [](Tape<double>& t, const std::vector<Var<double>>& v) {
        return mean_all(matmul(v[0], v[1]));
      },
      {rnd({3, 4}, rng), rnd({4, 2}, rng)}, rng);

  for (int mode = 0; mode < 4; ++mode) {
    bool ta = mode & 1, tb = mode & 2;
    std::vector<int> sa = ta ? std::vector<int>{2, 4, 3} : std::vector<int>{2, 3, 4};
    std::vector<int> sb = tb ? std::vector<int>{2, 5, 4} : std::vector<int>{2, 4, 5};
    gradcheck(
        [ta, tb](Tape<double>& t, const std::vector<Var<double>>& v) {
          return mean_all(square(bmm(v[0], v[1], ta, tb)));
        },
        {rnd(sa, rng), rnd(sb, rng)}, rng);
  }

  gradcheck(
      [](Tape<double>& t, const std::vector<Var<double>>& v) {
        return mean_all(add_rowvec(v[0], v[1]));
      },
      {rnd({5, 3}, rng), rnd({3}, rng)}, rng);
}

TEST_CASE("conv2d matches naive reference") {
  Rng rng(17);
  Tensor<double> x = rnd({2, 3, 5, 6}, rng);
  Tensor<double> w = rnd({4, 3, 3, 3}, rng);
  Tensor<double> b = rnd({4}, rng);
  int stride = 2, pad = 1;
  Tape<double> t;
  auto vx = t.input(Tensor<double>(x), false);
  auto vw = t.input(Tensor<double>(w), false);
  auto vb = t.input(Tensor<double>(b), false);
  auto out = conv2d(vx, vw, vb, stride, pad);
  int oh = out.dim(2), ow = out.dim(3);
  REQUIRE(oh == 3);
  REQUIRE(ow == 3);
  for (int n = 0; n < 2; ++n)
    for (int co = 0; co < 4; ++co)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double acc = b[co];
          for (int ci = 0; ci < 3; ++ci)
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                int iy = oy * stride - pad + ky;
                int ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= 5 || ix < 0 || ix >= 6) continue;
                acc += x[((n * 3 + ci) * 5 + iy) * 6 + ix] *
                       w[((co * 3 + ci) * 3 + ky) * 3 + kx];
              }
          CHECK(out.val()[((n * 4 + co) * oh + oy) * ow + ox] == doctest::Approx(acc));
        }
}

TEST_CASE("conv2d gradients") {
  Rng rng(19);
  gradcheck(
      [](Tape<double>& t, const std::vector<Var<double>>& v) {
        return mean_all(square(conv2d(v[0], v[1], v[2], 2, 1)));
      },
      {rnd({2, 3, 6, 6}, rng), rnd({4, 3, 3, 3}, rng), rnd({4}, rng)}, rng, 8);
  // 1x1 conv, no padding
  gradcheck(
      [](Tape<double>& t, const std::vector<Var<double>>& v) {
        return mean_all(square(conv2d(v[0], v[1], v[2], 1, 0)));
      },
      {rnd({1, 4, 3, 3}, rng), rnd({2, 4, 1, 1}, rng), rnd({2}, rng)}, rng);
}

TEST_CASE("spatial op gradients") {
  Rng rng(23);
  gradcheck(
      [](Tape<double>& t, const std::vector<Var<double>>& v) {
        return mean_all(square(upsample_nearest2(v[0])));
      },
      {rnd({2, 3, 4, 4}, rng)}, rng);
  gradcheck(
      [](Tape<double>& t, const std::vector<Var<double>>& v) {
        return mean_all(square(avgpool_all(v[0])));
      },
      {rnd({2, 3, 4, 4}, rng)}, rng);
  gradcheck(
      [](Tape<double>& t, const std::vector<Var<double>>& v) {
        return mean_all(square(slot_pool(v[0], 4)));
      },
      {rnd({2, 3, 2, 8}, rng)}, rng);
  gradcheck(
      [](Tape<double>& t, const std::vector<Var<double>>& v) {
        return mean_all(square(add_channel_bias(v[0], v[1])));
      },
      {rnd({2, 3, 4, 4}, rng), rnd({2, 3}, rng)}, rng);
  gradcheck(
      [](Tape<double>& t, const std::vector<Var<double>>& v) {
        return mean_all(square(concat_ch(v[0], v[1])));
      },
      {rnd({2, 2, 3, 3}, rng), rnd({2, 3, 3, 3}, rng)}, rng);
  gradcheck(
      [](Tape<double>& t, const std::vector<Var<double>>& v) {
        return mean_all(square(ntc_to_nchw(nchw_to_ntc(v[0]), 4, 4)));
      },
      {rnd({2, 3, 4, 4}, rng)}, rng);
}

TEST_CASE("normalization and softmax gradients") {
  Rng rng(29);
  gradcheck(
      [](Tape<double>& t, const std::vector<Var<double>>& v) {
        return mean_all(square(group_norm(v[0], 2, v[1], v[2], 1e-5)));
      },
      {rnd({2, 4, 3, 3}, rng), rnd({4}, rng), rnd({4}, rng)}, rng, 8);
  gradcheck(
      [](Tape<double>& t, const std::vector<Var<double>>& v) {
        return mean_all(square(layer_norm(v[0], v[1], v[2], 1e-5)));
      },
      {rnd({3, 2, 5}, rng), rnd({5}, rng), rnd({5}, rng)}, rng, 8);
  gradcheck(
      [](Tape<double>& t, const std::vector<Var<double>>& v) {
        return mean_all(mul(softmax_last(v[0]), v[1]));
      },
      {rnd({4, 6}, rng), rnd({4, 6}, rng)}, rng);

  Tape<double> t;
  auto x = t.input(Tensor<double>::randn({3, 7}, rng), false);
  auto sm = softmax_last(x);
  for (int r = 0; r < 3; ++r) {
    double s = 0;
    for (int c = 0; c < 7; ++c) s += sm.val()[r * 7 + c];
    CHECK(s == doctest::Approx(1.0));
  }
}

TEST_CASE("cross entropy gradient and value") {
  Rng rng(31);
  std::vector<int> targets = {1, 0, 2, 2};
  gradcheck(
      [&targets](Tape<double>& t, const std::vector<Var<double>>& v) {
        return cross_entropy(v[0], targets);
      },
      {rnd({4, 3}, rng)}, rng, 8);

  Tape<double> t;
  Tensor<double> logits = Tensor<double>::zeros({1, 3});
  auto l = cross_entropy(t.input(std::move(logits), false), std::vector<int>{0});
  CHECK(l.val()[0] == doctest::Approx(std::log(3.0)));
}

TEST_CASE("sequence op gradients") {
  Rng rng(37);
  std::vector<int> ids = {2, 0, 3, 3, 1};
  gradcheck(
      [&ids](Tape<double>& t, const std::vector<Var<double>>& v) {
        return mean_all(square(embedding(v[0], ids)));
      },
      {rnd({5, 4}, rng)}, rng, 8);

  std::vector<int> slots = {1, 3};
  gradcheck(
      [&slots](Tape<double>& t, const std::vector<Var<double>>& v) {
        return mean_all(square(row_substitute(v[0], v[1], slots)));
      },
      {rnd({5, 4}, rng), rnd({2, 4}, rng)}, rng, 8);

  gradcheck(
      [](Tape<double>& t, const std::vector<Var<double>>& v) {
        std::vector<Var<double>> xs = {v[0], v[1], v[2]};
        return mean_all(square(stack0(xs)));
      },
      {rnd({2, 3}, rng), rnd({2, 3}, rng), rnd({2, 3}, rng)}, rng);

  gradcheck(
      [](Tape<double>& t, const std::vector<Var<double>>& v) {
        return mean_all(square(pad_rows(v[0], 6)));
      },
      {rnd({3, 4}, rng)}, rng);

  gradcheck(
      [](Tape<double>& t, const std::vector<Var<double>>& v) {
        return mean_all(square(merge_heads(split_heads(v[0], 2), 2)));
      },
      {rnd({2, 3, 8}, rng)}, rng);
}

TEST_CASE("affine sample and channel sum gradients") {
  Rng rng(41);
  std::array<double, 6> m = {0.8, 0.1, 0.4, -0.05, 1.1, -0.2};
  gradcheck(
      [&m](Tape<double>& t, const std::vector<Var<double>>& v) {
        return mean_all(square(affine_sample(v[0], m, 5, 4)));
      },
      {rnd({2, 6, 7}, rng)}, rng, 8);

  std::vector<double> w = {0.299, 0.587, 0.114};
  gradcheck(
      [&w](Tape<double>& t, const std::vector<Var<double>>& v) {
        return mean_all(square(channel_weighted_sum(v[0], w)));
      },
      {rnd({3, 4, 5}, rng)}, rng);
}

TEST_CASE("attention and transformer block gradients") {
  Rng rng(43);
  ParamStore<double> ps;
  Rng init(1);
  auto attn = Attention<double>::create(ps, "attn", 6, 5, 8, 2, init);
  std::vector<int> valid = {3, 2};

  gradcheck(
      [&](Tape<double>& t, const std::vector<Var<double>>& v) {
        return mean_all(square(attn(t, v[0], v[1], &valid)));
      },
      {rnd({2, 4, 6}, rng), rnd({2, 3, 5}, rng)}, rng, 8);

  // parameter gradients via a training-style check
  Tape<double> t;
  ps.zero_grads();
  auto q = t.input(rnd({2, 4, 6}, rng), false);
  auto c = t.input(rnd({2, 3, 5}, rng), false);
  auto loss = mean_all(square(attn(t, q, c, &valid)));
  t.backward(loss);
  Param<double>* w = ps.find("attn.q.w");
  REQUIRE(w != nullptr);
  int j = 3;
  double eps = 1e-6;
  double saved = w->value[j];
  auto eval = [&]() {
    Tape<double> t2;
    auto q2 = t2.input(Tensor<double>(q.val()), false);
    auto c2 = t2.input(Tensor<double>(c.val()), false);
    return mean_all(square(attn(t2, q2, c2, &valid))).val()[0];
  };
  w->value[j] = saved + eps;
  double up = eval();
  w->value[j] = saved - eps;
  double dn = eval();
  w->value[j] = saved;
  double num = (up - dn) / (2 * eps);
  CHECK(std::abs(num - w->grad[j]) / std::max({std::abs(num), std::abs(w->grad[j]), 1e-4}) <
        1e-3);
}

TEST_CASE("adamw reduces a quadratic") {
  ParamStore<float> ps;
  Rng rng(5);
  Param<float>* p = ps.add("x", Tensor<float>::randn({8}, rng));
  AdamW<float> opt(0.05f, 0.0f);
  float first = 0;
  for (int it = 0; it < 200; ++it) {
    ps.zero_grads();
    Tape<float> t;
    auto x = t.param(p);
    auto loss = mean_all(square(x));
    if (it == 0) first = loss.val()[0];
    t.backward(loss);
    opt.step(ps);
  }
  Tape<float> t;
  float last = mean_all(square(t.param(p))).val()[0];
  CHECK(last < first * 0.01f);
}

TEST_CASE("frozen parameters receive no gradient but pass input gradients") {
  ParamStore<double> ps;
  Rng rng(3);
  Param<double>* w = ps.add("w", Tensor<double>::randn({4, 4}, rng), /*trainable=*/false);
  ps.zero_grads();
  Tape<double> t;
  auto x = t.input(Tensor<double>::randn({2, 4}, rng), true);
  auto y = mean_all(square(matmul(x, t.param(w))));
  t.backward(y);
  CHECK(w->grad.array().abs().maxCoeff() == 0.0);
  CHECK(t.grad(x.id).array().abs().maxCoeff() > 0.0);
}
