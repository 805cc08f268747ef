// src/dedup.cc

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

#include "vexkit/dedup.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "vexkit/errors.h"

namespace vexkit {

namespace {

std::size_t Find(std::vector<std::size_t> &parent, std::size_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

double Distance(const std::vector<float> &a, const std::vector<float> &b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = static_cast<double>(a[k]) - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

DedupReport DedupSpeaker(const EmbeddingMap &embeddings, double threshold) {
  if (!(threshold > 0.0)) Fail(ErrorKind::kConfig, "dedup threshold must be positive");
  DedupReport r;
  r.threshold = threshold;
  std::vector<const std::string *> ids;
  std::vector<const std::vector<float> *> vecs;
  for (const auto &[id, v] : embeddings) {
    if (!vecs.empty() && v.size() != vecs.front()->size())
      Fail(ErrorKind::kData, "dedup: embedding of '" + id + "' has dimension " +
                                 std::to_string(v.size()) + ", expected " +
                                 std::to_string(vecs.front()->size()));
    ids.push_back(&id);
    vecs.push_back(&v);
  }
  const std::size_t n = ids.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (Distance(*vecs[i], *vecs[j]) < threshold) {
        // ids are sorted, so the smaller root keeps the smaller id
        std::size_t a = Find(parent, i), b = Find(parent, j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
  std::map<std::size_t, DedupCluster> clusters;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = Find(parent, i);
    if (root == i) {
      r.kept.push_back(*ids[i]);
    } else {
      r.removed.push_back(*ids[i]);
      auto &c = clusters[root];
      c.keeper = *ids[root];
      c.removed.push_back(*ids[i]);
    }
  }
  for (auto &[root, c] : clusters) r.clusters.push_back(std::move(c));
  return r;
}

ManifestDedup DedupManifest(const Manifest &m, const EmbeddingLookup &lookup,
                            double threshold) {
  ManifestDedup out;
  std::set<std::string> removed;
  for (const auto &s : m.speakers()) {
    EmbeddingMap emb;
    for (std::size_t i : m.UtterancesOf(s.speaker_id)) {
      const std::string &id = m.utterances()[i].utterance_id;
      const std::vector<float> *v = lookup(id);
      if (!v) Fail(ErrorKind::kData, "dedup: no embedding for utterance '" + id + "'");
      emb.emplace(id, *v);
    }
    DedupReport r = DedupSpeaker(emb, threshold);
    removed.insert(r.removed.begin(), r.removed.end());
    out.num_removed += r.removed.size();
    out.per_speaker.emplace(s.speaker_id, std::move(r));
  }
  std::vector<UtteranceRecord> kept;
  for (const auto &u : m.utterances())
    if (!removed.count(u.utterance_id)) kept.push_back(u);
  out.manifest = Manifest::Create(m.speakers(), std::move(kept));
  return out;
}

std::string FormatDedupClusters(const std::vector<DedupCluster> &clusters) {
  std::string out;
  for (const auto &c : clusters) {
    out += c.keeper;
    for (const auto &id : c.removed) out += '\t' + id;
    out += '\n';
  }
  return out;
}

}  // namespace vexkit
