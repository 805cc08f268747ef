// ndgrad/tensor.cc

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

#include "vexkit/ndgrad/tensor.h"

#include <algorithm>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "vexkit/errors.h"

namespace vexkit::ndgrad {

namespace {

#if defined(__GLIBC__)
// Activations are large and short-lived.  Serving them from the heap and
// never trimming it avoids re-faulting fresh pages on every training step.
const bool kHeapTuned = [] {
  mallopt(M_MMAP_MAX, 0);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  return true;
}();
#endif

}  // namespace

std::size_t NumElements(const Shape &shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0)
      Fail(ErrorKind::kInvalidArgument,
           "tensor dimensions must be positive: " + ShapeString(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string ShapeString(const Shape &shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill)
    : shape_(std::move(shape)), data_(NumElements(shape_), fill) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (NumElements(shape_) != data_.size())
    Fail(ErrorKind::kInvalidArgument,
         "tensor value count " + std::to_string(data_.size()) +
             " does not match shape " + ShapeString(shape_));
}

template <typename T>
void Tensor<T>::Fill(T v) {
  std::fill(data_.begin(), data_.end(), v);
}

template <typename T>
Tensor<T> Tensor<T>::Reshaped(Shape shape) const {
  return Tensor<T>(std::move(shape), data_);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace vexkit::ndgrad
