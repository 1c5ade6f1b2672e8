#pragma once

#include <Eigen/Core>

#include <initializer_list>
#include <numeric>
#include <vector>

#include "glyphdiff/core/error.hpp"
#include "glyphdiff/core/rng.hpp"

namespace gd {

template <typename S>
using ArrayX = Eigen::Array<S, Eigen::Dynamic, 1>;

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
using MatMap = Eigen::Map<RowMat<S>>;

template <typename S>
using ConstMatMap = Eigen::Map<const RowMat<S>>;

// Dense row-major tensor of rank <= 4. Flat Eigen storage; matrix views via
// Eigen::Map for GEMM-backed ops.
template <typename S>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.setZero(count(shape_));
  }

  Tensor(std::initializer_list<int> shape) : Tensor(std::vector<int>(shape)) {}

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<int> shape, S v) {
    Tensor t(std::move(shape));
    t.data_.setConstant(v);
    return t;
  }

  static Tensor scalar(S v) { return full({1}, v); }

  static Tensor from(std::vector<int> shape, const std::vector<S>& values) {
    Tensor t(std::move(shape));
    check(int(values.size()) == t.numel(), "shape_mismatch", "tensor literal size");
    for (int i = 0; i < t.numel(); ++i) t.data_[i] = values[size_t(i)];
    return t;
  }

  static Tensor randn(std::vector<int> shape, Rng& rng, S stddev = S(1)) {
    Tensor t(std::move(shape));
    for (int i = 0; i < t.numel(); ++i) t.data_[i] = S(rng.normal()) * stddev;
    return t;
  }

  int ndim() const { return int(shape_.size()); }
  int dim(int i) const { return shape_[size_t(i)]; }
  const std::vector<int>& shape() const { return shape_; }
  int numel() const { return int(data_.size()); }
  bool empty() const { return data_.size() == 0; }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }
  S& operator[](int i) { return data_[i]; }
  S operator[](int i) const { return data_[i]; }

  ArrayX<S>& array() { return data_; }
  const ArrayX<S>& array() const { return data_; }

  // Matrix view with explicit dimensions (rows*cols must equal numel).
  MatMap<S> mat(int rows, int cols) {
    check(rows * cols == numel(), "shape_mismatch", "matrix view size");
    return MatMap<S>(data(), rows, cols);
  }
  ConstMatMap<S> mat(int rows, int cols) const {
    check(rows * cols == numel(), "shape_mismatch", "matrix view size");
    return ConstMatMap<S>(data(), rows, cols);
  }

  Tensor reshaped(std::vector<int> shape) const {
    check(count(shape) == numel(), "shape_mismatch", "reshape size");
    Tensor t = *this;
    t.shape_ = std::move(shape);
    return t;
  }

  void set_shape(std::vector<int> shape) {
    check(count(shape) == numel(), "shape_mismatch", "reshape size");
    shape_ = std::move(shape);
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  template <typename T>
  Tensor<T> cast() const {
    Tensor<T> t(shape_);
    for (int i = 0; i < numel(); ++i) t[i] = T(data_[i]);
    return t;
  }

  static int count(const std::vector<int>& shape) {
    int n = 1;
    for (int d : shape) {
      check(d >= 0, "bad_shape", "negative dimension");
      n *= d;
    }
    return n;
  }

 private:
  std::vector<int> shape_;
  ArrayX<S> data_;
};

template <typename S>
S max_abs_diff(const Tensor<S>& a, const Tensor<S>& b) {
  check(a.numel() == b.numel(), "shape_mismatch", "max_abs_diff");
  if (a.numel() == 0) return S(0);
  return (a.array() - b.array()).abs().maxCoeff();
}

}  // namespace gd
