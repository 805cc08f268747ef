// vexkit/frontend.h

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

#ifndef VEXKIT_FRONTEND_H_
#define VEXKIT_FRONTEND_H_

#include <string>
#include <vector>

#include <Eigen/Core>

#include "vexkit/rng.h"
#include "vexkit/wav.h"

namespace vexkit {

inline constexpr int kFreqBins = 512;
inline constexpr int kWindowSamples = 400;  // 25 ms at 16 kHz
inline constexpr int kHopSamples = 160;     // 10 ms at 16 kHz
inline constexpr int kFftLength = 1024;
inline constexpr int kCropFrames = 300;     // 3 s
inline constexpr int kNumTestCrops = 10;

using SpecMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Magnitude spectrogram, frequency bins along rows, frames along columns.
struct Spectrogram {
  SpecMatrix values;
  bool normalized = false;

  int freq_bins() const { return static_cast<int>(values.rows()); }
  int frames() const { return static_cast<int>(values.cols()); }
};

int NumFrames(std::size_t num_samples);

// Hamming-windowed short-time magnitude spectrum: 400-sample window, 160
// hop, 1024-point FFT, bins 1..512 (DC dropped).  Throws Error(kData) if
// the waveform is shorter than one window or not at 16 kHz.
Spectrogram ComputeSpectrogram(const Waveform &w);

// Per-frequency-row mean/variance normalisation (population variance).
// Rows with zero variance become all-zero.  Needs at least two frames.
Spectrogram Normalize(const Spectrogram &s);

// Extends the frame axis by mirroring interior frames (edge excluded).
Spectrogram ReflectPadFrames(const Spectrogram &s, int left, int right);

// Cyclic repetition of the frame axis up to `frames` columns.
Spectrogram WrapPadFrames(const Spectrogram &s, int frames);

// Brings a segment of roughly one crop length to exactly `frames` columns:
// a deficit of at most two frames (3 s gives 298) is reflect-padded split
// across both ends, larger deficits are wrap-padded.  Longer input is an
// error; use RandomCrop / TenCrops for those.
Spectrogram PadToCrop(const Spectrogram &s, int frames = kCropFrames);

Spectrogram SliceFrames(const Spectrogram &s, int offset, int frames);

// Contiguous `frames`-column slice at a uniformly drawn offset in
// [0, s.frames() - frames]; shorter input is wrap-padded and the generator
// is left untouched.
Spectrogram RandomCrop(const Spectrogram &s, Rng &rng,
                       int frames = kCropFrames);

// Offsets of the ten evenly spaced test crops for an input of
// `total_frames` (after wrap-padding to at least one crop).
std::vector<int> TenCropOffsets(int total_frames, int frames = kCropFrames);
std::vector<Spectrogram> TenCrops(const Spectrogram &s,
                                  int frames = kCropFrames);

// Optional on-disk cache: "VXSP", version, rows, cols, row-major float32.
void WriteSpectrogramCache(const Spectrogram &s, const std::string &path);
Spectrogram ReadSpectrogramCache(const std::string &path);

}  // namespace vexkit

#endif  // VEXKIT_FRONTEND_H_
