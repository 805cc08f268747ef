// vexkit/ndgrad/tensor.h

// Copyright 2026  The vexkit Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef VEXKIT_NDGRAD_TENSOR_H_
#define VEXKIT_NDGRAD_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace vexkit::ndgrad {

using Shape = std::vector<int>;

std::size_t NumElements(const Shape &shape);
std::string ShapeString(const Shape &shape);

// Dense row-major array.  float is the training precision, double the
// gradient-check precision; both are instantiated.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> values);

  const Shape &shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T *data() { return data_.data(); }
  const T *data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  T &operator[](std::size_t i) { return data_[i]; }
  const T &operator[](std::size_t i) const { return data_[i]; }

  // NCHW accessors for rank-4 tensors.
  T &at(int n, int c, int h, int w) {
    return data_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] +
                  h) * shape_[3] + w];
  }
  const T &at(int n, int c, int h, int w) const {
    return const_cast<Tensor *>(this)->at(n, c, h, w);
  }

  void Fill(T v);
  Tensor Reshaped(Shape shape) const;

  template <typename U>
  Tensor<U> Cast() const {
    std::vector<U> v(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(v));
  }

  bool operator==(const Tensor &o) const = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

}  // namespace vexkit::ndgrad

#endif  // VEXKIT_NDGRAD_TENSOR_H_
