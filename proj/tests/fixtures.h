// tests/fixtures.h

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

#ifndef VEXKIT_TESTS_FIXTURES_H_
#define VEXKIT_TESTS_FIXTURES_H_

#include <string>
#include <vector>

#include "vexkit/manifest.h"

namespace vexkit::testing {

struct GroupSpec {
  std::string nationality;
  Gender gender;
  int speakers;
};

// Speakers "<nat>-<g><k>" with utts_per_speaker utterances spread over
// two videos.
inline Manifest GroupedManifest(const std::vector<GroupSpec> &groups, int utts_per_speaker) {
  std::vector<SpeakerRecord> s;
  std::vector<UtteranceRecord> u;
  for (const auto &g : groups)
    for (int k = 0; k < g.speakers; ++k) {
      std::string id = g.nationality + "-" + std::string(GenderName(g.gender)) + std::to_string(k);
      s.push_back({id, g.gender, g.nationality, Split::kTest});
      for (int j = 0; j < utts_per_speaker; ++j) {
        std::string video = "v" + std::to_string(j % 2);
        u.push_back({id + "/" + video + "/u" + std::to_string(j), id, video,
                     id + "/" + std::to_string(j) + ".wav", 4.0});
      }
    }
  return Manifest::Create(s, u);
}

}  // namespace vexkit::testing

#endif  // VEXKIT_TESTS_FIXTURES_H_
