// ndgrad/tape.cc

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

#include "vexkit/ndgrad/tape.h"

#include "vexkit/errors.h"

namespace vexkit::ndgrad {

template <typename T>
Var<T> Tape<T>::Push(Node node) {
  nodes_.push_back(std::move(node));
  return Var<T>{this, static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var<T> Tape<T>::Constant(Tensor<T> value) {
  Node n;
  n.value = std::move(value);
  return Push(std::move(n));
}

template <typename T>
Var<T> Tape<T>::Leaf(Tensor<T> value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return Push(std::move(n));
}

template <typename T>
Var<T> Tape<T>::Param(Parameter<T> &p) {
  Node n;
  n.value = p.value;
  n.requires_grad = record_ && p.trainable;
  if (n.requires_grad) {
    Parameter<T> *param = &p;
    n.backward = [param](Tape &tape, int self) {
      const Tensor<T> &g = tape.grad(self);
      T *dst = param->grad.data();
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    };
  }
  return Push(std::move(n));
}

template <typename T>
Var<T> Tape<T>::Record(Tensor<T> value, const std::vector<Var<T>> &parents,
                       BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (const Var<T> &p : parents) {
    if (p.tape != this)
      Fail(ErrorKind::kInvalidArgument, "variable from a different tape");
    if (nodes_.at(p.id).requires_grad) n.requires_grad = true;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return Push(std::move(n));
}

template <typename T>
Tensor<T> &Tape<T>::grad(int id) {
  Node &n = nodes_.at(id);
  if (n.grad.empty()) n.grad = Tensor<T>(n.value.shape());
  return n.grad;
}

template <typename T>
void Tape<T>::Backward(Var<T> root) {
  if (root.tape != this)
    Fail(ErrorKind::kInvalidArgument, "Backward on a foreign variable");
  grad(root.id).Fill(T(1));
  for (int id = root.id; id >= 0; --id) {
    Node &n = nodes_[id];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, id);
    n.grad = Tensor<T>();  // consumed; leaves keep theirs
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace vexkit::ndgrad
