// frontend.cc

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

#include "vexkit/frontend.h"

#include <fftw3.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <mutex>
#include <numbers>

#include "vexkit/errors.h"

namespace vexkit {

namespace {

struct FftwDeleter {
  void operator()(void *p) const { fftw_free(p); }
};

// One r2c plan shared by all calls; fftw_execute_dft_r2c on fresh
// fftw_malloc'd buffers is thread-safe, planning is not.
class FftPlan {
 public:
  FftPlan() {
    std::unique_ptr<double, FftwDeleter> in(
        static_cast<double *>(fftw_malloc(sizeof(double) * kFftLength)));
    std::unique_ptr<fftw_complex, FftwDeleter> out(static_cast<fftw_complex *>(
        fftw_malloc(sizeof(fftw_complex) * (kFftLength / 2 + 1))));
    plan_ = fftw_plan_dft_r2c_1d(kFftLength, in.get(), out.get(),
                                 FFTW_ESTIMATE);
  }
  ~FftPlan() { fftw_destroy_plan(plan_); }
  fftw_plan get() const { return plan_; }

 private:
  fftw_plan plan_;
};

const FftPlan &SharedPlan() {
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  static FftPlan plan;
  return plan;
}

const std::vector<double> &HammingWindow() {
  static const std::vector<double> window = [] {
    std::vector<double> w(kWindowSamples);
    for (int n = 0; n < kWindowSamples; ++n)
      w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n /
                                    (kWindowSamples - 1));
    return w;
  }();
  return window;
}

}  // namespace

int NumFrames(std::size_t num_samples) {
  if (num_samples < static_cast<std::size_t>(kWindowSamples)) return 0;
  return static_cast<int>((num_samples - kWindowSamples) / kHopSamples) + 1;
}

Spectrogram ComputeSpectrogram(const Waveform &w) {
  if (w.sample_rate_hz != kSampleRateHz)
    Fail(ErrorKind::kData, "spectrogram: sample rate must be 16000 Hz, got " +
                               std::to_string(w.sample_rate_hz));
  const int frames = NumFrames(w.samples.size());
  if (frames < 1)
    Fail(ErrorKind::kData, "spectrogram: input shorter than one window (" +
                               std::to_string(w.samples.size()) + " samples)");
  const auto &window = HammingWindow();
  const FftPlan &plan = SharedPlan();
  std::unique_ptr<double, FftwDeleter> in(
      static_cast<double *>(fftw_malloc(sizeof(double) * kFftLength)));
  std::unique_ptr<fftw_complex, FftwDeleter> out(static_cast<fftw_complex *>(
      fftw_malloc(sizeof(fftw_complex) * (kFftLength / 2 + 1))));

  Spectrogram s;
  s.values.resize(kFreqBins, frames);
  for (int t = 0; t < frames; ++t) {
    const double *x = w.samples.data() + static_cast<std::size_t>(t) * kHopSamples;
    for (int n = 0; n < kWindowSamples; ++n) in.get()[n] = x[n] * window[n];
    std::memset(in.get() + kWindowSamples, 0,
                sizeof(double) * (kFftLength - kWindowSamples));
    fftw_execute_dft_r2c(plan.get(), in.get(), out.get());
    for (int k = 1; k <= kFreqBins; ++k) {
      const double re = out.get()[k][0], im = out.get()[k][1];
      s.values(k - 1, t) = std::sqrt(re * re + im * im);
    }
  }
  return s;
}

Spectrogram Normalize(const Spectrogram &s) {
  if (s.frames() < 2)
    Fail(ErrorKind::kInvalidArgument,
         "normalize: need at least 2 frames, got " +
             std::to_string(s.frames()));
  Spectrogram out;
  out.values.resize(s.freq_bins(), s.frames());
  const double n = s.frames();
  for (int r = 0; r < s.freq_bins(); ++r) {
    auto row = s.values.row(r);
    const double mean = row.sum() / n;
    const double var = (row.array() - mean).square().sum() / n;
    if (var <= 1e-300) {
      out.values.row(r).setZero();
    } else {
      out.values.row(r) = (row.array() - mean) / std::sqrt(var);
    }
  }
  out.normalized = true;
  return out;
}

Spectrogram ReflectPadFrames(const Spectrogram &s, int left, int right) {
  const int n = s.frames();
  if (left < 0 || right < 0 || left >= n || right >= n)
    Fail(ErrorKind::kInvalidArgument, "reflect pad wider than input");
  Spectrogram out;
  out.normalized = s.normalized;
  out.values.resize(s.freq_bins(), n + left + right);
  for (int j = 0; j < left; ++j) out.values.col(j) = s.values.col(left - j);
  out.values.middleCols(left, n) = s.values;
  for (int j = 0; j < right; ++j)
    out.values.col(left + n + j) = s.values.col(n - 2 - j);
  return out;
}

Spectrogram WrapPadFrames(const Spectrogram &s, int frames) {
  if (s.frames() < 1) Fail(ErrorKind::kInvalidArgument, "empty spectrogram");
  Spectrogram out;
  out.normalized = s.normalized;
  out.values.resize(s.freq_bins(), frames);
  for (int j = 0; j < frames; ++j) out.values.col(j) = s.values.col(j % s.frames());
  return out;
}

Spectrogram PadToCrop(const Spectrogram &s, int frames) {
  const int deficit = frames - s.frames();
  if (deficit < 0)
    Fail(ErrorKind::kInvalidArgument, "PadToCrop: input longer than crop");
  if (deficit == 0) return s;
  if (deficit <= 2 && s.frames() > 2)
    return ReflectPadFrames(s, deficit / 2, deficit - deficit / 2);
  return WrapPadFrames(s, frames);
}

Spectrogram SliceFrames(const Spectrogram &s, int offset, int frames) {
  if (offset < 0 || offset + frames > s.frames())
    Fail(ErrorKind::kInvalidArgument, "slice out of range");
  Spectrogram out;
  out.normalized = s.normalized;
  out.values = s.values.middleCols(offset, frames);
  return out;
}

Spectrogram RandomCrop(const Spectrogram &s, Rng &rng, int frames) {
  if (s.frames() < 1) Fail(ErrorKind::kInvalidArgument, "empty spectrogram");
  if (s.frames() <= frames) return WrapPadFrames(s, frames);
  const int offset =
      static_cast<int>(UniformIndex(rng, s.frames() - frames + 1));
  return SliceFrames(s, offset, frames);
}

std::vector<int> TenCropOffsets(int total_frames, int frames) {
  const int span = std::max(total_frames, frames) - frames;
  std::vector<int> offsets(kNumTestCrops);
  for (int i = 0; i < kNumTestCrops; ++i)
    offsets[i] = static_cast<int>(
        std::lround(static_cast<double>(i) * span / (kNumTestCrops - 1)));
  return offsets;
}

std::vector<Spectrogram> TenCrops(const Spectrogram &s, int frames) {
  const Spectrogram &src =
      s.frames() < frames ? WrapPadFrames(s, frames) : s;
  std::vector<Spectrogram> crops;
  crops.reserve(kNumTestCrops);
  for (int off : TenCropOffsets(src.frames(), frames))
    crops.push_back(SliceFrames(src, off, frames));
  return crops;
}

namespace {
constexpr char kSpecMagic[4] = {'V', 'X', 'S', 'P'};
constexpr std::uint32_t kSpecVersion = 1;
}  // namespace

void WriteSpectrogramCache(const Spectrogram &s, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write '" + path + "'");
  std::uint32_t hdr[3] = {kSpecVersion, static_cast<std::uint32_t>(s.freq_bins()),
                          static_cast<std::uint32_t>(s.frames())};
  out.write(kSpecMagic, 4);
  out.write(reinterpret_cast<const char *>(hdr), sizeof(hdr));
  std::vector<float> buf(s.values.size());
  for (Eigen::Index i = 0; i < s.values.size(); ++i)
    buf[i] = static_cast<float>(s.values.data()[i]);
  out.write(reinterpret_cast<const char *>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) Fail(ErrorKind::kIo, "write failed for '" + path + "'");
}

Spectrogram ReadSpectrogramCache(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open '" + path + "'");
  char magic[4];
  std::uint32_t hdr[3];
  in.read(magic, 4);
  in.read(reinterpret_cast<char *>(hdr), sizeof(hdr));
  if (!in || std::memcmp(magic, kSpecMagic, 4) != 0)
    Fail(ErrorKind::kData, "'" + path + "' is not a spectrogram cache");
  if (hdr[0] != kSpecVersion)
    Fail(ErrorKind::kData, "'" + path + "': unsupported version " +
                               std::to_string(hdr[0]));
  if (hdr[1] != static_cast<std::uint32_t>(kFreqBins))
    Fail(ErrorKind::kData, "'" + path + "': expected 512 rows, got " +
                               std::to_string(hdr[1]));
  std::vector<float> buf(static_cast<std::size_t>(hdr[1]) * hdr[2]);
  in.read(reinterpret_cast<char *>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!in) Fail(ErrorKind::kData, "'" + path + "': truncated payload");
  Spectrogram s;
  s.values.resize(hdr[1], hdr[2]);
  for (std::size_t i = 0; i < buf.size(); ++i) s.values.data()[i] = buf[i];
  return s;
}

}  // namespace vexkit
