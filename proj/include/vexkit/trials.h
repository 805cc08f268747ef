// include/vexkit/trials.h

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

#ifndef VEXKIT_TRIALS_H_
#define VEXKIT_TRIALS_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vexkit/manifest.h"

namespace vexkit {

struct Trial {
  bool target = false;
  std::string utt_a;
  std::string utt_b;
  bool operator==(const Trial &) const = default;
};

struct TrialList {
  std::string name;
  std::vector<Trial> pairs;
  std::string fingerprint;  // generator parameters, empty for loaded lists
};

// Whole-manifest random pairs, half targets (rounded down).  Every speaker
// with at least one utterance can appear; targets come from speakers with
// two or more.
TrialList GenRandomTrials(const Manifest &m, std::size_t n_pairs,
                          std::uint64_t seed);

// Pairs drawn inside one (nationality, gender) group.  Groups with an
// "unknown" attribute or fewer than min_group speakers are skipped; groups
// are drawn with probability proportional to their speaker count.
TrialList GenHardTrials(const Manifest &m, std::size_t n_pairs, int min_group,
                        std::uint64_t seed);

struct TrialGroup {
  std::string nationality;
  Gender gender = Gender::kUnknown;
  std::vector<std::string> speakers;  // sorted
};

std::vector<TrialGroup> EligibleGroups(const Manifest &m, int min_group);

// Throws Error(kData) if a pair repeats an utterance, names an unknown
// utterance or carries a label that disagrees with the speaker ids.
void VerifyTrialLabels(const TrialList &t, const Manifest &m);

// "label utt_a utt_b" per line, label in {0, 1}.
TrialList ParseTrialList(std::string_view text, const std::string &name = "");
TrialList LoadTrialList(const std::string &path);
std::string FormatTrialList(const TrialList &t);
void SaveTrialList(const TrialList &t, const std::string &path);

}  // namespace vexkit

#endif  // VEXKIT_TRIALS_H_
