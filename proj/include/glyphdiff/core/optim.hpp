#pragma once

#include <cmath>

#include "glyphdiff/core/tape.hpp"

namespace gd {

// AdamW: Adam moments with decoupled weight decay.
template <typename S>
class AdamW {
 public:
  explicit AdamW(S lr, S weight_decay = S(0.01), S beta1 = S(0.9), S beta2 = S(0.999),
                 S eps = S(1e-8))
      : lr_(lr), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void set_lr(S lr) { lr_ = lr; }
  S lr() const { return lr_; }

  void step(ParamStore<S>& params) {
    ++t_;
    S bc1 = S(1) - S(std::pow(double(beta1_), double(t_)));
    S bc2 = S(1) - S(std::pow(double(beta2_), double(t_)));
    for (Param<S>* p : params.all()) {
      if (!p->trainable) continue;
      if (p->adam_m.numel() != p->value.numel()) {
        p->adam_m = Tensor<S>(p->value.shape());
        p->adam_v = Tensor<S>(p->value.shape());
      }
      auto& m = p->adam_m.array();
      auto& v = p->adam_v.array();
      const auto& g = p->grad.array();
      m = beta1_ * m + (S(1) - beta1_) * g;
      v = beta2_ * v + (S(1) - beta2_) * g.square();
      p->value.array() -= lr_ * ((m / bc1) / ((v / bc2).sqrt() + eps_) + wd_ * p->value.array());
    }
  }

 private:
  S lr_, wd_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

}  // namespace gd
