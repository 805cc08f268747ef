// src/metrics.cc

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

#include "vexkit/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "vexkit/errors.h"

namespace vexkit {

namespace {

void CountClasses(const ScoreSet &s, std::size_t *tar, std::size_t *non) {
  *tar = *non = 0;
  for (const auto &t : s) {
    if (!std::isfinite(t.distance))
      Fail(ErrorKind::kData, "score set contains a non-finite distance");
    ++(t.target ? *tar : *non);
  }
  if (*tar == 0 || *non == 0)
    Fail(ErrorKind::kData,
         "score set needs at least one target and one nontarget trial");
}

}  // namespace

std::vector<DetPoint> DetCurve(const ScoreSet &s) {
  std::size_t tar, non;
  CountClasses(s, &tar, &non);
  std::vector<ScoredTrial> sorted = s;
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredTrial &a, const ScoredTrial &b) {
              return a.distance < b.distance;
            });
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<DetPoint> det;
  det.push_back({-inf, 1.0, 0.0});
  std::size_t accepted_tar = 0, accepted_non = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double d = sorted[i].distance;
    for (; i < sorted.size() && sorted[i].distance == d; ++i)
      ++(sorted[i].target ? accepted_tar : accepted_non);
    const double th = i < sorted.size() ? d + (sorted[i].distance - d) / 2 : inf;
    det.push_back({th, static_cast<double>(tar - accepted_tar) / tar,
                   static_cast<double>(accepted_non) / non});
  }
  return det;
}

double EerFromCurve(const std::vector<DetPoint> &det) {
  for (std::size_t k = 0; k < det.size(); ++k) {
    const double diff = det[k].p_miss - det[k].p_fa;
    if (diff > 0.0) continue;
    if (diff == 0.0 || k == 0) return det[k].p_miss;
    const double prev = det[k - 1].p_miss - det[k - 1].p_fa;
    const double t = prev / (prev - diff);
    return det[k - 1].p_miss + t * (det[k].p_miss - det[k - 1].p_miss);
  }
  Fail(ErrorKind::kData, "DET curve never crosses p_miss = p_fa");
}

double Eer(const ScoreSet &s) { return EerFromCurve(DetCurve(s)); }

double Cdet(double p_miss, double p_fa, const CdetParams &p) {
  return p.c_miss * p_miss * p.p_tar + p.c_fa * p_fa * (1.0 - p.p_tar);
}

double CdetAt(const ScoreSet &s, double threshold, const CdetParams &p) {
  std::size_t tar, non;
  CountClasses(s, &tar, &non);
  std::size_t miss = 0, fa = 0;
  for (const auto &t : s) {
    const bool accept = t.distance <= threshold;
    if (t.target && !accept) ++miss;
    if (!t.target && accept) ++fa;
  }
  return Cdet(static_cast<double>(miss) / tar, static_cast<double>(fa) / non, p);
}

double MinCdet(const ScoreSet &s, const CdetParams &p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto &pt : DetCurve(s)) best = std::min(best, Cdet(pt.p_miss, pt.p_fa, p));
  return best;
}

double NormalizedMinCdet(const ScoreSet &s, const CdetParams &p) {
  return MinCdet(s, p) / std::min(p.c_miss * p.p_tar, p.c_fa * (1.0 - p.p_tar));
}

MetricsReport Evaluate(const ScoreSet &s, const CdetParams &p) {
  MetricsReport r;
  CountClasses(s, &r.num_targets, &r.num_nontargets);
  const auto det = DetCurve(s);
  r.eer = EerFromCurve(det);
  r.min_cdet = std::numeric_limits<double>::infinity();
  for (const auto &pt : det) r.min_cdet = std::min(r.min_cdet, Cdet(pt.p_miss, pt.p_fa, p));
  r.min_cdet_normalized =
      r.min_cdet / std::min(p.c_miss * p.p_tar, p.c_fa * (1.0 - p.p_tar));
  r.params = p;
  return r;
}

std::string FormatReport(const MetricsReport &r, const std::string &title) {
  char buf[1024];
  std::snprintf(buf, sizeof(buf),
                "[%s]\n"
                "trials\t%zu\ttargets\t%zu\tnontargets\t%zu\n"
                "EER (%%)\t%.2f\n"
                "min Cdet (p_tar=%g, c_miss=%g, c_fa=%g)\t%.3f\n"
                "normalized min Cdet\t%.3f\n"
                "summary (normalized min Cdet | EER %%)\t%.3f | %.2f\n",
                title.c_str(), r.num_targets + r.num_nontargets, r.num_targets,
                r.num_nontargets, 100.0 * r.eer, r.params.p_tar, r.params.c_miss,
                r.params.c_fa, r.min_cdet, r.min_cdet_normalized,
                r.min_cdet_normalized, 100.0 * r.eer);
  return buf;
}

}  // namespace vexkit
