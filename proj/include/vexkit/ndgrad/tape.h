// vexkit/ndgrad/tape.h

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

#ifndef VEXKIT_NDGRAD_TAPE_H_
#define VEXKIT_NDGRAD_TAPE_H_

#include <deque>
#include <functional>
#include <vector>

#include "vexkit/ndgrad/params.h"
#include "vexkit/ndgrad/tensor.h"

namespace vexkit::ndgrad {

template <typename T>
class Tape;

// Handle to a value recorded on a Tape.
template <typename T>
struct Var {
  Tape<T> *tape = nullptr;
  int id = -1;

  const Tensor<T> &value() const { return tape->value(*this); }
  const Shape &shape() const { return value().shape(); }
};

// Records the forward computation and replays it in reverse.  Every op
// pushes one node holding its output and a closure that reads the node's
// gradient and accumulates into its parents.  Nodes that depend on no
// differentiable leaf carry no closure, so inference builds no backward
// state beyond the values themselves.
template <typename T>
class Tape {
 public:
  // Closure receives the tape and the id of the node being back-propagated.
  using BackwardFn = std::function<void(Tape &, int)>;

  // A tape built with record = false never records backward closures, which
  // keeps inference memory to the live activations.
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  Var<T> Constant(Tensor<T> value);
  // Differentiable input whose gradient can be read after Backward.
  Var<T> Leaf(Tensor<T> value);
  // Binds a parameter; Backward adds into p.grad (only if p.trainable).
  Var<T> Param(Parameter<T> &p);

  Var<T> Record(Tensor<T> value, const std::vector<Var<T>> &parents,
                BackwardFn backward);

  // Seeds d(root)/d(root) = 1 for every element of root and propagates.
  void Backward(Var<T> root);

  const Tensor<T> &value(Var<T> v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var<T> v) const { return nodes_.at(v.id).requires_grad; }
  // Gradient buffer of a node, allocated (zero) on first access.
  Tensor<T> &grad(int id);
  Tensor<T> &grad(Var<T> v) { return grad(v.id); }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var<T> Push(Node node);

  std::deque<Node> nodes_;
  bool record_ = true;
};

}  // namespace vexkit::ndgrad

#endif  // VEXKIT_NDGRAD_TAPE_H_
