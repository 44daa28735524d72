#pragma once

#include "deepdetect/errors.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace deepdetect {

// Dense array with an explicit shape. Four-dimensional tensors use
// batch x channels x height x width order. Float is the working precision;
// double instantiations serve numerical verification.
template <typename Scalar>
class TensorT {
 public:
  using ArrayMap = Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>>;
  using ConstArrayMap = Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>;

  TensorT() = default;
  explicit TensorT(std::vector<int> shape, Scalar fill = Scalar(0)) : shape_(std::move(shape)) {
    size_t n = 1;
    for (int d : shape_) {
      if (d < 0) throw InvalidArgument("tensor extents must be non-negative");
      n *= static_cast<size_t>(d);
    }
    data_.assign(n, fill);
  }
  TensorT(std::initializer_list<int> shape, Scalar fill = Scalar(0)) : TensorT(std::vector<int>(shape), fill) {}

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  size_t size() const { return data_.size(); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  std::span<Scalar> values() { return data_; }
  std::span<const Scalar> values() const { return data_; }
  Scalar& operator[](size_t i) { return data_[i]; }
  Scalar operator[](size_t i) const { return data_[i]; }

  Scalar& at(int n, int c, int y, int x) { return data_[offset(n, c, y, x)]; }
  Scalar at(int n, int c, int y, int x) const { return data_[offset(n, c, y, x)]; }

  ArrayMap array() { return {data_.data(), static_cast<Eigen::Index>(data_.size())}; }
  ConstArrayMap array() const { return {data_.data(), static_cast<Eigen::Index>(data_.size())}; }

  bool same_shape(const TensorT& other) const { return shape_ == other.shape_; }

  bool all_finite() const {
    for (Scalar v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  std::string shape_string() const {
    std::string s = "[";
    for (size_t i = 0; i < shape_.size(); ++i) s += (i ? "x" : "") + std::to_string(shape_[i]);
    return s + "]";
  }

  template <typename Other>
  TensorT<Other> cast() const {
    TensorT<Other> out(shape_);
    for (size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<Other>(data_[i]);
    return out;
  }

  bool operator==(const TensorT&) const = default;

 private:
  size_t offset(int n, int c, int y, int x) const {
    return ((static_cast<size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x;
  }

  std::vector<int> shape_;
  std::vector<Scalar> data_;
};

using Tensor = TensorT<float>;

}  // namespace deepdetect
