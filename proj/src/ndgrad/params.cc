// ndgrad/params.cc

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

#include "vexkit/ndgrad/params.h"

#include <algorithm>

#include "vexkit/errors.h"

namespace vexkit::ndgrad {

template <typename T>
Parameter<T> &ParamSet<T>::Add(const std::string &name, Tensor<T> value,
                               bool trainable) {
  if (name.empty() || index_.count(name))
    Fail(ErrorKind::kInvalidArgument, "duplicate or empty parameter name '" +
                                          name + "'");
  Parameter<T> p;
  p.name = name;
  p.grad = Tensor<T>(value.shape());
  p.velocity = Tensor<T>(value.shape());
  p.value = std::move(value);
  p.trainable = trainable;
  params_.push_back(std::move(p));
  index_[name] = params_.size() - 1;
  return params_.back();
}

template <typename T>
void ParamSet<T>::Remove(const std::string &name) {
  auto it = index_.find(name);
  if (it == index_.end())
    Fail(ErrorKind::kInvalidArgument, "no parameter '" + name + "'");
  params_.erase(params_.begin() + static_cast<std::ptrdiff_t>(it->second));
  Reindex();
}

template <typename T>
void ParamSet<T>::RemovePrefix(const std::string &prefix) {
  std::erase_if(params_, [&](const Parameter<T> &p) {
    return p.name.compare(0, prefix.size(), prefix) == 0;
  });
  Reindex();
}

template <typename T>
bool ParamSet<T>::Contains(const std::string &name) const {
  return index_.count(name) != 0;
}

template <typename T>
Parameter<T> &ParamSet<T>::Get(const std::string &name) {
  auto it = index_.find(name);
  if (it == index_.end())
    Fail(ErrorKind::kInvalidArgument, "no parameter '" + name + "'");
  return params_[it->second];
}

template <typename T>
const Parameter<T> &ParamSet<T>::Get(const std::string &name) const {
  return const_cast<ParamSet *>(this)->Get(name);
}

template <typename T>
void ParamSet<T>::ZeroGrad() {
  for (auto &p : params_) p.grad.Fill(T(0));
}

template <typename T>
std::size_t ParamSet<T>::NumTrainableValues() const {
  std::size_t n = 0;
  for (const auto &p : params_)
    if (p.trainable) n += p.value.size();
  return n;
}

template <typename T>
void ParamSet<T>::Reindex() {
  index_.clear();
  for (std::size_t i = 0; i < params_.size(); ++i) index_[params_[i].name] = i;
}

template class ParamSet<float>;
template class ParamSet<double>;

}  // namespace vexkit::ndgrad
