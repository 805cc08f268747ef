// include/vexkit/run-config.h

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

#ifndef VEXKIT_RUN_CONFIG_H_
#define VEXKIT_RUN_CONFIG_H_

#include <cstdint>
#include <string>
#include <string_view>

#include "vexkit/ndgrad/sgd.h"
#include "vexkit/trunk.h"

namespace vexkit {

struct PretrainOptions {
  int crops_per_utterance = 1;  // random crops drawn per utterance per epoch
  int patience = 3;             // epochs without improvement before stopping
};

struct FinetuneOptions {
  int epochs = 10;
  double lr_scale = 0.1;
  double margin = 1.0;
  double pos_fraction = 0.5;
  double keep_fraction = 0.01;
  double hard_mix = 0.5;  // share of each epoch's pairs taken from the mined pool
  int pairs_per_epoch = 256;
  int patience = 3;
};

struct EvalOptions {
  int trials = 600;  // random pairs drawn from the held-out videos
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string manifest_path;
  std::string workdir;
  TrunkConfig trunk;  // num_classes 0 means "number of speakers"
  ndgrad::SgdConfig optimizer;
  PretrainOptions pretrain;
  FinetuneOptions finetune;
  EvalOptions eval;

  void Validate() const;  // Error(kConfig)
};

// Flat "key = value" text; '#' starts a comment.  Every key is known, seed is
// mandatory and frontend.* keys must name the toolkit's fixed framing.  Range
// checks are left to Validate, since overrides may follow.
RunConfig ParseRunConfig(std::string_view text);
RunConfig LoadRunConfig(const std::string &path);

// Applies one "key=value" override on top of an existing config.
void SetRunConfigValue(RunConfig &cfg, std::string_view key,
                       std::string_view value);

// Canonical form: every key, full precision, parses back to the same config.
std::string FormatRunConfig(const RunConfig &cfg);

}  // namespace vexkit

#endif  // VEXKIT_RUN_CONFIG_H_
