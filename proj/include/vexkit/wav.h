// vexkit/wav.h

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

#ifndef VEXKIT_WAV_H_
#define VEXKIT_WAV_H_

#include <string>
#include <vector>

namespace vexkit {

inline constexpr int kSampleRateHz = 16000;

struct Waveform {
  std::vector<double> samples;  // amplitudes in [-1, 1)
  int sample_rate_hz = kSampleRateHz;
};

// Reads a RIFF/WAVE file holding mono 16-bit little-endian PCM at 16 kHz.
// Anything else (stereo, 8/24-bit, float, other rates) is rejected with
// Error(kData) rather than converted.
Waveform ReadWav(const std::string &path);

// Writes mono 16-bit PCM; samples are clipped to [-1, 32767/32768].
void WriteWav(const Waveform &w, const std::string &path);

}  // namespace vexkit

#endif  // VEXKIT_WAV_H_
