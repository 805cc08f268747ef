// vexkit/ndgrad/params.h

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

#ifndef VEXKIT_NDGRAD_PARAMS_H_
#define VEXKIT_NDGRAD_PARAMS_H_

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "vexkit/ndgrad/tensor.h"

namespace vexkit::ndgrad {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;      // same shape as value
  Tensor<T> velocity;  // momentum buffer, same shape as value
  bool trainable = true;
};

// Insertion-ordered named parameters.  Non-trainable entries hold state
// that must travel with the model (batchnorm running statistics).
template <typename T>
class ParamSet {
 public:
  Parameter<T> &Add(const std::string &name, Tensor<T> value,
                    bool trainable = true);
  void Remove(const std::string &name);
  // Removes every parameter whose name starts with `prefix`.
  void RemovePrefix(const std::string &prefix);

  bool Contains(const std::string &name) const;
  Parameter<T> &Get(const std::string &name);
  const Parameter<T> &Get(const std::string &name) const;

  std::size_t size() const { return params_.size(); }
  std::vector<Parameter<T>> &items() { return params_; }
  const std::vector<Parameter<T>> &items() const { return params_; }

  void ZeroGrad();
  std::size_t NumTrainableValues() const;

  template <typename U>
  ParamSet<U> Cast() const {
    ParamSet<U> out;
    for (const auto &p : params_) {
      auto &q = out.Add(p.name, p.value.template Cast<U>(), p.trainable);
      q.velocity = p.velocity.template Cast<U>();
    }
    return out;
  }

 private:
  void Reindex();

  std::vector<Parameter<T>> params_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace vexkit::ndgrad

#endif  // VEXKIT_NDGRAD_PARAMS_H_
