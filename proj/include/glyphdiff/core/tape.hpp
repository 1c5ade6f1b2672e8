#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "glyphdiff/core/tensor.hpp"

namespace gd {

// Trainable parameter with optimizer slots. Owned by a ParamStore; networks
// keep raw pointers, which stay valid for the store's lifetime.
template <typename S>
struct Param {
  std::string name;
  Tensor<S> value;
  Tensor<S> grad;
  Tensor<S> adam_m, adam_v;
  bool trainable = true;

  void zero_grad() {
    if (grad.numel() != value.numel()) grad = Tensor<S>(value.shape());
    grad.array().setZero();
  }
};

template <typename S>
class ParamStore {
 public:
  Param<S>* add(const std::string& name, Tensor<S> init, bool trainable = true) {
    check(params_.find(name) == params_.end(), "dup_param", "duplicate parameter " + name);
    auto p = std::make_unique<Param<S>>();
    p->name = name;
    p->value = std::move(init);
    p->trainable = trainable;
    p->zero_grad();
    Param<S>* raw = p.get();
    order_.push_back(raw);
    params_.emplace(name, std::move(p));
    return raw;
  }

  Param<S>* find(const std::string& name) {
    auto it = params_.find(name);
    return it == params_.end() ? nullptr : it->second.get();
  }

  const std::vector<Param<S>*>& all() const { return order_; }

  void zero_grads() {
    for (auto* p : order_) p->zero_grad();
  }

  int64_t parameter_count(const std::string& prefix = "") const {
    int64_t n = 0;
    for (auto* p : order_)
      if (p->name.rfind(prefix, 0) == 0) n += p->value.numel();
    return n;
  }

 private:
  std::map<std::string, std::unique_ptr<Param<S>>> params_;
  std::vector<Param<S>*> order_;
};

template <typename S>
class Tape;

// Lightweight handle to a tape node.
template <typename S>
struct Var {
  Tape<S>* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor<S>& val() const;
  const std::vector<int>& shape() const { return val().shape(); }
  int dim(int i) const { return val().dim(i); }
  int numel() const { return val().numel(); }
};

// Reverse-mode tape. One tape per forward pass; nodes are appended in
// topological order so backward is a reverse sweep.
template <typename S>
class Tape {
 public:
  struct Node {
    Tensor<S> value;
    Tensor<S> grad;  // allocated lazily
    std::vector<int> parents;
    std::function<void(Tape&, int)> backward;  // reads grad(id), accumulates into parents
    Param<S>* param = nullptr;                 // leaf bound to an external parameter
    bool needs_grad = false;
    bool has_grad = false;
  };

  Var<S> constant(Tensor<S> v) { return push(std::move(v), {}, nullptr, false); }

  Var<S> input(Tensor<S> v, bool needs_grad = true) {
    return push(std::move(v), {}, nullptr, needs_grad);
  }

  Var<S> param(Param<S>* p) {
    Var<S> v = push(Tensor<S>(p->value), {}, nullptr, p->trainable);
    nodes_[size_t(v.id)].param = p;
    return v;
  }

  Var<S> push(Tensor<S> v, std::vector<int> parents,
              std::function<void(Tape&, int)> backward, bool needs_grad) {
    Node n;
    n.value = std::move(v);
    n.parents = std::move(parents);
    n.backward = std::move(backward);
    n.needs_grad = needs_grad;
    nodes_.push_back(std::move(n));
    return Var<S>{this, int(nodes_.size()) - 1};
  }

  // Node creation helper used by ops: needs_grad inferred from parents.
  Var<S> op(Tensor<S> v, std::vector<int> parents, std::function<void(Tape&, int)> backward) {
    bool ng = false;
    for (int p : parents) ng = ng || nodes_[size_t(p)].needs_grad;
    return push(std::move(v), std::move(parents), ng ? std::move(backward) : nullptr, ng);
  }

  const Tensor<S>& value(int id) const { return nodes_[size_t(id)].value; }
  Node& node(int id) { return nodes_[size_t(id)]; }

  Tensor<S>& grad(int id) {
    Node& n = nodes_[size_t(id)];
    if (!n.has_grad) {
      n.grad = Tensor<S>(n.value.shape());
      n.has_grad = true;
    }
    return n.grad;
  }

  bool needs_grad(int id) const { return nodes_[size_t(id)].needs_grad; }

  // Accumulate g into node id's gradient if it participates in the graph.
  void accumulate(int id, const Tensor<S>& g) {
    Node& n = nodes_[size_t(id)];
    if (!n.needs_grad) return;
    grad(id).array() += g.array();
  }

  void accumulate_scaled(int id, const Tensor<S>& g, S scale) {
    Node& n = nodes_[size_t(id)];
    if (!n.needs_grad) return;
    grad(id).array() += g.array() * scale;
  }

  // Backpropagate from a scalar root. Parameter leaves accumulate into their
  // Param::grad buffers.
  void backward(Var<S> root) {
    check(root.tape == this, "tape_mismatch", "backward root from another tape");
    check(root.numel() == 1, "not_scalar", "backward root must be scalar");
    grad(root.id).array().setConstant(S(1));
    for (int id = root.id; id >= 0; --id) {
      Node& n = nodes_[size_t(id)];
      if (!n.needs_grad || !n.has_grad) continue;
      if (n.backward) n.backward(*this, id);
      if (n.param && n.param->trainable) n.param->grad.array() += n.grad.array();
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
};

template <typename S>
const Tensor<S>& Var<S>::val() const {
  return tape->value(id);
}

}  // namespace gd
