// vexkit/ndgrad/sgd.h

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

#ifndef VEXKIT_NDGRAD_SGD_H_
#define VEXKIT_NDGRAD_SGD_H_

#include "vexkit/ndgrad/params.h"

namespace vexkit::ndgrad {

struct SgdConfig {
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double lr_initial = 1e-2;
  double lr_final = 1e-8;
  int epochs = 30;
  int batch_size = 64;

  // Throws Error(kConfig) when out of range.
  void Validate() const;
};

// Geometric interpolation from lr_initial (epoch 0) to lr_final
// (epoch epochs-1); a single-epoch schedule stays at lr_initial.
double LearningRate(const SgdConfig &cfg, int epoch);

// v <- momentum * v + grad + weight_decay * p ;  p <- p - lr * v
// applied to every trainable parameter, with lr = lr_scale * LearningRate.
template <typename T>
void SgdStep(ParamSet<T> &params, const SgdConfig &cfg, int epoch,
             double lr_scale = 1.0);

}  // namespace vexkit::ndgrad

#endif  // VEXKIT_NDGRAD_SGD_H_
