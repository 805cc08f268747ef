// ndgrad/sgd.cc

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

#include "vexkit/ndgrad/sgd.h"

#include <cmath>
#include <string>

#include "vexkit/errors.h"

namespace vexkit::ndgrad {

void SgdConfig::Validate() const {
  auto bad = [](const std::string &m) { Fail(ErrorKind::kConfig, "optimizer: " + m); };
  if (!(momentum >= 0.0 && momentum < 1.0)) bad("momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) bad("weight_decay must be >= 0");
  if (!(lr_initial >= 0.0) || !(lr_final >= 0.0)) bad("learning rates must be >= 0");
  if (lr_final > lr_initial) bad("lr_final must not exceed lr_initial");
  if (epochs < 1) bad("epochs must be positive");
  if (batch_size < 1) bad("batch_size must be positive");
}

double LearningRate(const SgdConfig &cfg, int epoch) {
  if (cfg.epochs <= 1 || cfg.lr_initial <= 0.0) return cfg.lr_initial;
  if (cfg.lr_final <= 0.0) return epoch == 0 ? cfg.lr_initial : 0.0;
  const double frac = static_cast<double>(epoch) / (cfg.epochs - 1);
  return cfg.lr_initial * std::pow(cfg.lr_final / cfg.lr_initial, frac);
}

template <typename T>
void SgdStep(ParamSet<T> &params, const SgdConfig &cfg, int epoch,
             double lr_scale) {
  const T lr = static_cast<T>(lr_scale * LearningRate(cfg, epoch));
  const T mom = static_cast<T>(cfg.momentum);
  const T wd = static_cast<T>(cfg.weight_decay);
  for (auto &p : params.items()) {
    if (!p.trainable) continue;
    T *v = p.velocity.data();
    T *w = p.value.data();
    const T *g = p.grad.data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      v[i] = mom * v[i] + g[i] + wd * w[i];
      w[i] -= lr * v[i];
    }
  }
}

template void SgdStep(ParamSet<float> &, const SgdConfig &, int, double);
template void SgdStep(ParamSet<double> &, const SgdConfig &, int, double);

}  // namespace vexkit::ndgrad
