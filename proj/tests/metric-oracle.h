// tests/metric-oracle.h

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

#ifndef VEXKIT_TESTS_METRIC_ORACLE_H_
#define VEXKIT_TESTS_METRIC_ORACLE_H_

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "vexkit/metrics.h"
#include "vexkit/rng.h"

namespace vexkit::testing {

struct OraclePoint {
  double threshold, p_miss, p_fa;
};

// Counts every trial again for every candidate threshold.
inline std::vector<OraclePoint> BruteForceDet(const ScoreSet &s) {
  std::set<double> distinct;
  for (const auto &t : s) distinct.insert(t.distance);
  std::vector<double> d(distinct.begin(), distinct.end());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> thresholds = {-inf};
  for (std::size_t i = 0; i + 1 < d.size(); ++i) thresholds.push_back(d[i] + (d[i + 1] - d[i]) / 2);
  thresholds.push_back(inf);
  std::vector<OraclePoint> out;
  for (double th : thresholds) {
    double tar = 0, non = 0, miss = 0, fa = 0;
    for (const auto &t : s) {
      if (t.target) {
        ++tar;
        if (!(t.distance <= th)) ++miss;
      } else {
        ++non;
        if (t.distance <= th) ++fa;
      }
    }
    out.push_back({th, miss / tar, fa / non});
  }
  return out;
}

inline double BruteForceEer(const ScoreSet &s) {
  auto det = BruteForceDet(s);
  for (std::size_t k = 1; k < det.size(); ++k) {
    const double a = det[k - 1].p_miss - det[k - 1].p_fa;
    const double b = det[k].p_miss - det[k].p_fa;
    if (b == 0.0) return det[k].p_miss;
    if (a > 0.0 && b < 0.0)
      return det[k - 1].p_miss + a / (a - b) * (det[k].p_miss - det[k - 1].p_miss);
  }
  return det.front().p_miss;
}

inline double BruteForceMinCdet(const ScoreSet &s, double p_tar = 0.01, double c_miss = 1.0,
                                double c_fa = 1.0) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto &p : BruteForceDet(s))
    best = std::min(best, c_miss * p.p_miss * p_tar + c_fa * p.p_fa * (1 - p_tar));
  return best;
}

// Random set with both classes present; quantised distances create ties.
inline ScoreSet RandomScoreSet(Rng &rng, std::size_t max_trials) {
  const std::size_t n = 2 + UniformIndex(rng, max_trials - 1);
  const bool quantise = UniformIndex(rng, 2) == 1;
  ScoreSet s(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i].target = i == 0 ? true : i == 1 ? false : UniformIndex(rng, 2) == 1;
    double d = UniformUnit(rng) * 2.0 + (s[i].target ? 0.0 : 0.4);
    if (quantise) d = std::floor(d * 20) / 20;
    s[i].distance = d;
  }
  return s;
}

}  // namespace vexkit::testing

#endif  // VEXKIT_TESTS_METRIC_ORACLE_H_
