// include/vexkit/toy-bench.h

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

#ifndef VEXKIT_TOY_BENCH_H_
#define VEXKIT_TOY_BENCH_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vexkit/manifest.h"
#include "vexkit/wav.h"

namespace vexkit {

// Synthetic corpus: each speaker is a harmonic source with its own pitch and
// formant envelope, uttered in syllable bursts.  Everything that varies
// between videos and utterances of one speaker is scaled by noise_level, so
// noise_level 0 gives utterances with one spectral profile per speaker.
struct ToyBenchSpec {
  int n_speakers = 20;
  int utterances_per_speaker = 30;
  int videos_per_speaker = 3;
  double duration_s = 4.0;
  double noise_level = 1.0;
  std::uint64_t seed = 1;

  void Validate() const;  // Error(kConfig)
};

struct ToySpeaker {
  std::string speaker_id;
  Gender gender = Gender::kUnknown;
  std::string nationality;
  double f0_hz = 0.0;
  std::array<double, 3> formant_hz{};
  std::array<double, 3> bandwidth_hz{};
};

std::vector<ToySpeaker> ToySpeakers(const ToyBenchSpec &spec);

Waveform SynthesizeToyUtterance(const ToyBenchSpec &spec, int speaker,
                                int video, int utterance);

// Builds the manifest for the corpus; audio paths are relative to the
// manifest's directory.
Manifest ToyBenchManifest(const ToyBenchSpec &spec);

// Writes <out_dir>/manifest.tsv and one WAV per utterance under
// <out_dir>/wav.  Returns the manifest path.
std::string GenerateToyBench(const ToyBenchSpec &spec, const std::string &out_dir);

}  // namespace vexkit

#endif  // VEXKIT_TOY_BENCH_H_
