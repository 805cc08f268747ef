// include/vexkit/embed.h

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

#ifndef VEXKIT_EMBED_H_
#define VEXKIT_EMBED_H_

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vexkit/frontend.h"
#include "vexkit/metrics.h"
#include "vexkit/trials.h"
#include "vexkit/trunk.h"

namespace vexkit {

using Vector = std::vector<float>;

// Test-time augmentation protocols.
enum class Protocol {
  kFullPool = 1,   // one pass over the whole utterance
  kCropMean = 2,   // mean of ten crop embeddings, re-normalised
  kCropPairs = 3,  // mean of the 10 x 10 crop-pair distances
};

std::optional<Protocol> ParseProtocol(std::string_view s);

struct UtteranceEmbedding {
  std::string utterance_id;
  Vector full;                // protocol 1
  Vector crop_mean;           // protocol 2
  std::vector<Vector> crops;  // protocol 3, ten unit vectors
  bool operator==(const UtteranceEmbedding &) const = default;
};

// Input is the per-utterance normalised spectrogram.  The trunk must carry
// the embedding head.
Vector EmbedFull(Trunk<float> &trunk, const Spectrogram &utterance);

struct CropEmbeddings {
  Vector mean;
  std::vector<Vector> crops;
};
CropEmbeddings EmbedCrops(Trunk<float> &trunk, const Spectrogram &utterance);

UtteranceEmbedding EmbedUtterance(Trunk<float> &trunk, const std::string &id,
                                  const Spectrogram &utterance);

double EuclideanDistance(const Vector &a, const Vector &b);
// Mean then unit-normalise; zero mean vectors are an error.
Vector MeanNormalized(const std::vector<Vector> &v);

// Throws Error(kInvalidArgument) if an embedding lacks what the protocol
// needs.
double ScorePair(const UtteranceEmbedding &a, const UtteranceEmbedding &b,
                 Protocol protocol);

// Embedding store file: magic "VXEM", u32 version, u32 dim, u32 count, then
// per record {u32 id length, id, full, crop mean, u32 crop count, crops},
// all vectors as float32.
using EmbeddingStore = std::map<std::string, UtteranceEmbedding>;
void WriteEmbeddings(const EmbeddingStore &store, const std::string &path);
EmbeddingStore ReadEmbeddings(const std::string &path);

struct ScoreLine {
  std::string trial_id;
  std::string utt_a;
  std::string utt_b;
  double distance = 0.0;
  std::optional<bool> target;
  bool operator==(const ScoreLine &) const = default;
};

inline constexpr std::string_view kScoreHeader = "vexkit-scores v1 polarity=distance";

std::vector<ScoreLine> ScoreTrials(const TrialList &trials,
                                   const EmbeddingStore &store,
                                   Protocol protocol);
std::string FormatScores(const std::vector<ScoreLine> &scores);
std::vector<ScoreLine> ParseScores(std::string_view text);
void WriteScores(const std::vector<ScoreLine> &scores, const std::string &path);
std::vector<ScoreLine> ReadScores(const std::string &path);
// Every line must carry a label.
ScoreSet ToScoreSet(const std::vector<ScoreLine> &scores);

}  // namespace vexkit

#endif  // VEXKIT_EMBED_H_
