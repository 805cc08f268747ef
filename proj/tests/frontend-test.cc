// tests/frontend-test.cc

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

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "vexkit/errors.h"
#include "vexkit/frontend.h"

using namespace vexkit;

namespace {

Waveform Noise(std::size_t n, std::uint64_t seed) {
  Rng rng = SubStream(seed, "noise");
  Waveform w;
  w.samples.resize(n);
  for (auto &x : w.samples) x = 0.1 * StandardNormal(rng);
  return w;
}

// Magnitude of one bin of one frame by a direct DFT sum.
double DftOracle(const Waveform &w, int frame, int bin) {
  std::complex<double> acc = 0.0;
  for (int n = 0; n < 400; ++n) {
    const double win = 0.54 - 0.46 * std::cos(2 * std::numbers::pi * n / 399.0);
    const double ph = -2 * std::numbers::pi * bin * n / 1024.0;
    acc += w.samples[frame * 160 + n] * win * std::complex<double>(std::cos(ph), std::sin(ph));
  }
  return std::abs(acc);
}

double RowEnergy(const Spectrogram &s, int row) {
  return s.values.row(row).squaredNorm();
}

}  // namespace

TEST_CASE("frame count and canonical crop size") {
  CHECK(NumFrames(48000) == 298);
  CHECK(NumFrames(400) == 1);
  CHECK(NumFrames(559) == 1);
  CHECK(NumFrames(560) == 2);
  Spectrogram s = ComputeSpectrogram(Noise(48000, 1));
  CHECK(s.freq_bins() == 512);
  CHECK(s.frames() == 298);
  Spectrogram c = PadToCrop(s);
  CHECK(c.frames() == 300);
  // one reflected frame on each side
  CHECK(c.values.col(0) == s.values.col(1));
  CHECK(c.values.col(299) == s.values.col(296));
  CHECK(c.values.middleCols(1, 298) == s.values);

  Spectrogram n = Normalize(c);
  for (int r = 0; r < 512; ++r) {
    const double mean = n.values.row(r).mean();
    const double var = (n.values.row(r).array() - mean).square().mean();
    CHECK(std::abs(mean) < 1e-6);
    CHECK(std::abs(var - 1.0) < 1e-6);
  }
}

TEST_CASE("spectrogram input checks") {
  CHECK_THROWS_AS(ComputeSpectrogram(Noise(399, 2)), Error);
  Waveform w = Noise(1000, 2);
  w.sample_rate_hz = 8000;
  CHECK_THROWS_AS(ComputeSpectrogram(w), Error);
}

TEST_CASE("spectrogram matches a direct DFT") {
  Waveform w = Noise(16000, 3);
  Spectrogram s = ComputeSpectrogram(w);
  for (int frame : {0, 7, s.frames() - 1})
    for (int bin : {1, 2, 100, 333, 511, 512})
      CHECK(std::abs(s.values(bin - 1, frame) - DftOracle(w, frame, bin)) < 1e-9);
}

TEST_CASE("zero input and scale covariance") {
  Waveform z;
  z.samples.assign(4000, 0.0);
  CHECK(ComputeSpectrogram(z).values.isZero(0.0));
  Waveform w = Noise(8000, 4), w3 = w;
  for (auto &x : w3.samples) x *= 3.0;
  Spectrogram a = ComputeSpectrogram(w), b = ComputeSpectrogram(w3);
  CHECK(((b.values - 3.0 * a.values).cwiseAbs().maxCoeff()) < 1e-9);
  CHECK(ComputeSpectrogram(w).values == a.values);
}

TEST_CASE("bin-centred sinusoid") {
  const int bin = 64;  // 1 kHz
  Waveform w;
  w.samples.resize(16000);
  for (std::size_t n = 0; n < w.samples.size(); ++n)
    w.samples[n] = 0.5 * std::sin(2 * std::numbers::pi * bin * n / 1024.0);
  Spectrogram s = ComputeSpectrogram(w);
  const int peak = bin - 1;
  int argmax = 0;
  for (int r = 0; r < 512; ++r)
    if (RowEnergy(s, r) > RowEnergy(s, argmax)) argmax = r;
  CHECK(argmax == peak);
  // A 400-sample window zero-padded to 1024 has a main lobe about five
  // bins wide, so the leakage bound is checked outside it.
  for (int r = 0; r < 512; ++r) {
    if (std::abs(r - peak) < 6) continue;
    CHECK(RowEnergy(s, peak) > 10.0 * RowEnergy(s, r));
  }
  // The adjacent row inside the main lobe, compared with the oracle.
  CHECK(std::abs(s.values(peak + 1, 5) - DftOracle(w, 5, bin + 1)) < 1e-9);
  CHECK(std::abs(s.values(peak, 5) - DftOracle(w, 5, bin)) < 1e-9);
}

TEST_CASE("normalize") {
  Spectrogram a;
  a.values.setZero(2, 3);
  a.values.row(0) << 1, 3, 2;
  a.values.row(1) << 5, 5, 5;
  Spectrogram two;
  two.values.resize(1, 2);
  two.values << 1, 3;
  Spectrogram t = Normalize(two);
  CHECK(t.values(0, 0) == doctest::Approx(-1.0));
  CHECK(t.values(0, 1) == doctest::Approx(1.0));
  CHECK(t.normalized);
  Spectrogram n = Normalize(a);
  CHECK(n.values.row(1).isZero(0.0));

  Rng rng = SubStream(5, "t");
  Spectrogram r;
  r.values.resize(512, 300);
  for (Eigen::Index i = 0; i < r.values.size(); ++i)
    r.values.data()[i] = 4.0 + 2.5 * StandardNormal(rng);
  Spectrogram rn = Normalize(r);
  for (int row = 0; row < 512; ++row) {
    const double mean = rn.values.row(row).mean();
    const double var = (rn.values.row(row).array() - mean).square().mean();
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(var - 1.0) < 1e-9);
  }
  CHECK((Normalize(rn).values - rn.values).cwiseAbs().maxCoeff() < 1e-9);

  Spectrogram one;
  one.values.setOnes(512, 1);
  CHECK_THROWS_AS(Normalize(one), Error);
}

TEST_CASE("random crop") {
  Spectrogram s;
  s.values.resize(512, 600);
  for (int j = 0; j < 600; ++j) s.values.col(j).setConstant(j);

  Spectrogram exact = SliceFrames(s, 0, 300);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Rng rng = SubStream(seed, "crop");
    CHECK(RandomCrop(exact, rng).values == exact.values);
  }

  Rng a = SubStream(9, "crop"), replay = SubStream(9, "crop");
  Spectrogram c = RandomCrop(s, a);
  const int off = static_cast<int>(UniformIndex(replay, 301));
  CHECK(off >= 0);
  CHECK(off <= 300);
  CHECK(c.frames() == 300);
  CHECK(c.values(0, 0) == off);
  CHECK(c.values(511, 299) == off + 299);

  Spectrogram shortspec = SliceFrames(s, 0, 100);
  Rng r = SubStream(1, "crop");
  Spectrogram w = RandomCrop(shortspec, r);
  CHECK(w.frames() == 300);
  CHECK(w.freq_bins() == 512);
  for (int j = 0; j < 300; ++j) CHECK(w.values(3, j) == j % 100);
}

TEST_CASE("ten crops") {
  CHECK(TenCropOffsets(300) == std::vector<int>(10, 0));
  CHECK(TenCropOffsets(1200) == std::vector<int>{0, 100, 200, 300, 400, 500, 600, 700, 800, 900});
  // round(i * 10 / 9) for i = 0..9
  std::vector<int> expect;
  for (int i = 0; i < 10; ++i) expect.push_back(static_cast<int>(std::floor(i * 10.0 / 9.0 + 0.5)));
  CHECK(TenCropOffsets(310) == expect);
  CHECK(expect == std::vector<int>{0, 1, 2, 3, 4, 6, 7, 8, 9, 10});

  Spectrogram s;
  s.values.resize(512, 300);
  for (int j = 0; j < 300; ++j) s.values.col(j).setConstant(j);
  auto crops = TenCrops(s);
  REQUIRE(crops.size() == 10);
  for (const auto &c : crops) CHECK(c.values == s.values);

  Spectrogram shortspec = SliceFrames(s, 0, 120);
  for (const auto &c : TenCrops(shortspec)) {
    CHECK(c.frames() == 300);
    CHECK(c.values(0, 250) == 10);
  }
}

TEST_CASE("spectrogram cache round trip") {
  Spectrogram s = Normalize(ComputeSpectrogram(Noise(8000, 6)));
  auto path = (std::filesystem::temp_directory_path() / "vexkit-spec-test.bin").string();
  WriteSpectrogramCache(s, path);
  Spectrogram r = ReadSpectrogramCache(path);
  CHECK(r.values == s.values.cast<float>().cast<double>());
  std::filesystem::remove(path);
  CHECK_THROWS_AS(ReadSpectrogramCache(path), Error);
}
