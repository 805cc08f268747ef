// include/vexkit/dedup.h

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

#ifndef VEXKIT_DEDUP_H_
#define VEXKIT_DEDUP_H_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vexkit/manifest.h"

namespace vexkit {

inline constexpr double kDefaultDedupThreshold = 0.1;

struct DedupCluster {
  std::string keeper;                // lexicographically smallest member
  std::vector<std::string> removed;  // sorted
};

struct DedupReport {
  std::vector<std::string> kept;     // sorted
  std::vector<std::string> removed;  // sorted
  std::vector<DedupCluster> clusters;  // sorted by keeper
  double threshold = kDefaultDedupThreshold;
};

using EmbeddingMap = std::map<std::string, std::vector<float>>;

// Connected components of the graph joining utterances whose Euclidean
// distance is below the threshold.
DedupReport DedupSpeaker(const EmbeddingMap &embeddings,
                         double threshold = kDefaultDedupThreshold);

// Returns nullptr for utterances without an embedding.
using EmbeddingLookup = std::function<const std::vector<float> *(const std::string &)>;

struct ManifestDedup {
  Manifest manifest;  // removed utterances dropped, speakers kept
  std::map<std::string, DedupReport> per_speaker;
  std::size_t num_removed = 0;
};

ManifestDedup DedupManifest(const Manifest &m, const EmbeddingLookup &lookup,
                            double threshold = kDefaultDedupThreshold);

// One line per cluster: keeper then removed ids, tab separated.
std::string FormatDedupClusters(const std::vector<DedupCluster> &clusters);

}  // namespace vexkit

#endif  // VEXKIT_DEDUP_H_
