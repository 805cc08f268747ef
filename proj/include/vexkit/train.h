// include/vexkit/train.h

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

#ifndef VEXKIT_TRAIN_H_
#define VEXKIT_TRAIN_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vexkit/embed.h"
#include "vexkit/frontend.h"
#include "vexkit/manifest.h"
#include "vexkit/rng.h"
#include "vexkit/run-config.h"
#include "vexkit/trials.h"
#include "vexkit/trunk.h"

namespace vexkit {

struct PairSample {
  std::string utt_a;
  std::string utt_b;
  int label = 0;  // 1 same speaker, 0 different speakers
  bool mined_hard = false;
  bool operator==(const PairSample &) const = default;
};

// Utterance indices into the manifest, each list in manifest order.
struct ValidationSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

// One whole video per speaker with at least two videos goes to validation.
ValidationSplit SplitValidation(const Manifest &m, std::uint64_t seed);

// Exactly n_pairs pairs drawn from the given utterances, of which
// floor(n_pairs * pos_fraction) are positive, in shuffled order.
std::vector<PairSample> SamplePairs(const Manifest &m,
                                    const std::vector<std::size_t> &utterances,
                                    std::size_t n_pairs, double pos_fraction,
                                    Rng &rng);

// Number of pairs kept from n candidates: floor(n * keep_fraction), at least 1.
std::size_t MinedCount(std::size_t n_candidates, double keep_fraction);

// Keeps the candidates with the smallest distances, ties broken by
// (utt_a, utt_b); the result is sorted the same way and flagged mined_hard.
std::vector<PairSample> MineHardNegatives(
    const std::vector<PairSample> &candidates,
    const std::vector<double> &distances, double keep_fraction);

using EmbeddingFn = std::function<Vector(const std::string &utterance_id)>;
std::vector<PairSample> MineHardNegatives(
    const std::vector<PairSample> &candidates, const EmbeddingFn &embed,
    double keep_fraction);

// Unnormalised magnitude spectrograms held in single precision.
class FeatureStore {
 public:
  void Add(const std::string &utterance_id, const Spectrogram &s);
  bool Contains(const std::string &utterance_id) const;
  Spectrogram Get(const std::string &utterance_id) const;
  std::size_t size() const { return items_.size(); }

 private:
  struct Item {
    int rows = 0, cols = 0;
    std::vector<float> values;
  };
  std::map<std::string, Item, std::less<>> items_;
};

enum class TrainStage { kIdentification, kContrastive };
std::string_view TrainStageName(TrainStage s);

struct EpochLog {
  TrainStage stage = TrainStage::kIdentification;
  int epoch = 0;
  double loss = 0.0;
  double val_metric = 0.0;  // top-1 accuracy or EER, NaN without validation
  double lr = 0.0;
  bool operator==(const EpochLog &) const = default;
};

std::string FormatEpochLog(const EpochLog &e);

// Progress of one stage; everything needed to resume it besides parameters.
struct StageState {
  int next_epoch = 0;
  bool finished = false;
  int best_epoch = -1;
  double best_metric = 0.0;
  int since_best = 0;
  std::vector<EpochLog> log;
};

// Text sidecar with reals in hexadecimal floating point, so a resumed run
// sees bit-identical bookkeeping.
std::string FormatStageState(const StageState &s, TrainStage stage);
StageState ParseStageState(std::string_view text, TrainStage stage);

struct TrainData {
  const Manifest *manifest = nullptr;
  const FeatureStore *features = nullptr;
  ValidationSplit split;
  std::map<std::string, int, std::less<>> class_of;  // speaker id -> label
  TrialList val_trials;  // all pairs of validation utterances, may be empty
};

TrainData MakeTrainData(const Manifest &m, const FeatureStore &f,
                        const RunConfig &cfg);

// Called after every completed epoch; `improved` marks a new best.
using EpochHook = std::function<void(const StageState &state,
                                     const Trunk<float> &trunk, bool improved)>;

// Softmax identification over random crops.  Runs from state.next_epoch
// until the epoch budget or patience is exhausted.
void PretrainIdentification(Trunk<float> &trunk, const TrainData &data,
                            const RunConfig &cfg, StageState &state,
                            const EpochHook &hook = {});

// Contrastive training on random pairs mixed with hard negatives mined
// offline at the start of each epoch; every batch takes its hard_mix share
// of mined pairs.  The trunk must carry the embedding head.
void FinetuneContrastive(Trunk<float> &trunk, const TrainData &data,
                         const RunConfig &cfg, StageState &state,
                         const EpochHook &hook = {});

// Top-1 accuracy of the classification head on whole utterances.
double IdentificationAccuracy(Trunk<float> &trunk, const TrainData &data,
                              const std::vector<std::size_t> &utterances);

// EER of whole-utterance embeddings on a trial list.
double VerificationEer(Trunk<float> &trunk, const FeatureStore &features,
                       const TrialList &trials);

}  // namespace vexkit

#endif  // VEXKIT_TRAIN_H_
