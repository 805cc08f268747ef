// include/vexkit/metrics.h

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

#ifndef VEXKIT_METRICS_H_
#define VEXKIT_METRICS_H_

#include <cstddef>
#include <string>
#include <vector>

namespace vexkit {

// One verification trial: lower distance means more target-like.
struct ScoredTrial {
  double distance = 0.0;
  bool target = false;
};

using ScoreSet = std::vector<ScoredTrial>;

// A trial is accepted iff distance <= threshold.
struct DetPoint {
  double threshold = 0.0;
  double p_miss = 0.0;
  double p_fa = 0.0;
};

struct CdetParams {
  double p_tar = 0.01;
  double c_miss = 1.0;
  double c_fa = 1.0;
};

// Points ordered by increasing threshold: -inf, the midpoints between
// consecutive distinct distances, +inf.  Throws unless both classes occur.
std::vector<DetPoint> DetCurve(const ScoreSet &s);

// Linear interpolation of (p_miss - p_fa) between the two DET points that
// straddle zero.
double Eer(const ScoreSet &s);
double EerFromCurve(const std::vector<DetPoint> &det);

double Cdet(double p_miss, double p_fa, const CdetParams &p = {});
double CdetAt(const ScoreSet &s, double threshold, const CdetParams &p = {});
double MinCdet(const ScoreSet &s, const CdetParams &p = {});
// MinCdet divided by the cost of the better trivial system,
// min(c_miss * p_tar, c_fa * (1 - p_tar)).
double NormalizedMinCdet(const ScoreSet &s, const CdetParams &p = {});

struct MetricsReport {
  std::size_t num_targets = 0;
  std::size_t num_nontargets = 0;
  double eer = 0.0;  // rate in [0, 1]
  double min_cdet = 0.0;
  double min_cdet_normalized = 0.0;
  CdetParams params;
};

MetricsReport Evaluate(const ScoreSet &s, const CdetParams &p = {});
std::string FormatReport(const MetricsReport &r, const std::string &title);

}  // namespace vexkit

#endif  // VEXKIT_METRICS_H_
