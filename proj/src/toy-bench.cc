// src/toy-bench.cc

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

#include "vexkit/toy-bench.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "vexkit/errors.h"
#include "vexkit/rng.h"

namespace vexkit {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTopHz = 4000.0;      // harmonics stop here
constexpr double kRampS = 0.02;        // syllable on/off ramp
constexpr double kPeak = 0.5;          // output peak amplitude

std::string Padded(int v, int width) {
  std::string s = std::to_string(v);
  if (static_cast<int>(s.size()) < width) s.insert(0, width - s.size(), '0');
  return s;
}

int Digits(int n) {
  int d = 1;
  for (int v = n - 1; v >= 10; v /= 10) ++d;
  return std::max(d, 2);
}

std::string SpeakerId(const ToyBenchSpec &s, int k) {
  return "spk" + Padded(k, Digits(s.n_speakers));
}
std::string VideoName(int v) { return "v" + std::to_string(v); }
std::string UttName(const ToyBenchSpec &s, int u) {
  return "u" + Padded(u, Digits(s.utterances_per_speaker));
}

double Uniform(Rng &rng, double lo, double hi) {
  return lo + (hi - lo) * UniformUnit(rng);
}

// Per-video recording conditions.
struct Channel {
  double f0_scale = 1.0;
  double tilt = 0.0;  // log-gain slope across 0..4 kHz
};

Channel VideoChannel(const ToyBenchSpec &spec, int speaker, int video) {
  Rng rng = SubStream(spec.seed, "toygen.video",
                      static_cast<std::uint64_t>(speaker) * 1000 + video);
  Channel c;
  c.f0_scale = 1.0 + 0.01 * spec.noise_level * StandardNormal(rng);
  c.tilt = 0.3 * spec.noise_level * StandardNormal(rng);
  return c;
}

// Gate of syllable bursts separated by short pauses, with raised-cosine
// ramps at each edge.
std::vector<double> SyllableGate(std::size_t n, Rng &rng) {
  std::vector<double> gate(n, 0.0);
  const double fs = kSampleRateHz;
  double t = Uniform(rng, 0.0, 0.05);
  const double total = n / fs;
  while (t < total) {
    const double len = Uniform(rng, 0.15, 0.35);
    const double start = t, end = std::min(total, t + len);
    for (std::size_t i = static_cast<std::size_t>(start * fs);
         i < n && i < static_cast<std::size_t>(end * fs); ++i) {
      const double ti = i / fs;
      double g = 1.0;
      if (ti - start < kRampS) g = 0.5 - 0.5 * std::cos(kPi * (ti - start) / kRampS);
      if (end - ti < kRampS) g = std::min(g, 0.5 - 0.5 * std::cos(kPi * (end - ti) / kRampS));
      gate[i] = g;
    }
    t = end + Uniform(rng, 0.05, 0.15);
  }
  return gate;
}

}  // namespace

void ToyBenchSpec::Validate() const {
  auto bad = [](const std::string &m) { Fail(ErrorKind::kConfig, "toygen: " + m); };
  if (n_speakers < 2) bad("n_speakers must be at least 2");
  if (utterances_per_speaker < 1) bad("utterances_per_speaker must be positive");
  if (videos_per_speaker < 1 || videos_per_speaker > utterances_per_speaker)
    bad("videos_per_speaker must lie in [1, utterances_per_speaker]");
  if (!(duration_s >= 0.05 && duration_s <= 600.0))
    bad("duration_s must lie in [0.05, 600]");
  if (!(noise_level >= 0.0 && noise_level <= 10.0))
    bad("noise_level must lie in [0, 10]");
}

std::vector<ToySpeaker> ToySpeakers(const ToyBenchSpec &spec) {
  spec.Validate();
  std::vector<ToySpeaker> out;
  for (int k = 0; k < spec.n_speakers; ++k) {
    Rng rng = SubStream(spec.seed, "toygen.speaker", k);
    ToySpeaker s;
    s.speaker_id = SpeakerId(spec, k);
    // Blocks of five speakers alternate gender; two blocks per nationality.
    const int block = k / 5;
    s.gender = block % 2 == 0 ? Gender::kMale : Gender::kFemale;
    s.nationality = "toy" + std::to_string(block / 2);
    s.f0_hz = 100.0 + 8.0 * k;  // distinct pitch per speaker
    s.formant_hz = {Uniform(rng, 300, 900), Uniform(rng, 1000, 2200),
                    Uniform(rng, 2400, 3400)};
    s.bandwidth_hz = {Uniform(rng, 80, 200), Uniform(rng, 80, 200),
                      Uniform(rng, 80, 200)};
    out.push_back(s);
  }
  return out;
}

Waveform SynthesizeToyUtterance(const ToyBenchSpec &spec, int speaker,
                                int video, int utterance) {
  const std::vector<ToySpeaker> speakers = ToySpeakers(spec);
  if (speaker < 0 || speaker >= spec.n_speakers)
    Fail(ErrorKind::kInvalidArgument, "toygen: speaker index out of range");
  const ToySpeaker &sp = speakers[speaker];
  const Channel ch = VideoChannel(spec, speaker, video);
  Rng rng = SubStream(spec.seed, "toygen.utterance",
                      (static_cast<std::uint64_t>(speaker) << 32) |
                          static_cast<std::uint64_t>(utterance));
  const double nl = spec.noise_level;

  const double f0 = sp.f0_hz * ch.f0_scale * (1.0 + 0.01 * nl * StandardNormal(rng));
  const double drift_depth = 0.03 * nl;
  const double drift_rate = Uniform(rng, 0.3, 1.0);
  const double drift_phase = Uniform(rng, 0.0, 2 * kPi);
  std::array<double, 3> formants = sp.formant_hz;
  for (double &f : formants) f *= 1.0 + 0.03 * nl * StandardNormal(rng);

  const double f0_max = f0 * (1.0 + drift_depth);
  const int harmonics = std::max(1, static_cast<int>(kTopHz / f0_max));
  std::vector<double> amp(harmonics + 1, 0.0);
  for (int k = 1; k <= harmonics; ++k) {
    const double f = k * f0;
    double env = 0.1;
    for (int j = 0; j < 3; ++j) {
      const double z = (f - formants[j]) / sp.bandwidth_hz[j];
      env += std::exp(-0.5 * z * z);
    }
    amp[k] = env / std::sqrt(k) * std::exp(ch.tilt * (f / kTopHz - 0.5));
  }

  const std::size_t n = static_cast<std::size_t>(spec.duration_s * kSampleRateHz);
  const std::vector<double> gate = SyllableGate(n, rng);
  Waveform w;
  w.samples.resize(n);
  double phase = Uniform(rng, 0.0, 2 * kPi);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kSampleRateHz;
    const double fi = f0 * (1.0 + drift_depth * std::sin(2 * kPi * drift_rate * t + drift_phase));
    phase += 2 * kPi * fi / kSampleRateHz;
    if (phase > 2 * kPi) phase -= 2 * kPi;
    // cos(k theta) by the Chebyshev recurrence.
    const double c1 = std::cos(phase);
    double prev = 1.0, cur = c1, acc = amp[1] * c1;
    for (int k = 2; k <= harmonics; ++k) {
      const double next = 2.0 * c1 * cur - prev;
      prev = cur;
      cur = next;
      acc += amp[k] * cur;
    }
    w.samples[i] = gate[i] * acc;
  }
  double peak = 0.0;
  for (double v : w.samples) peak = std::max(peak, std::abs(v));
  const double scale = peak > 0.0 ? kPeak / peak : 0.0;
  const double noise_amp = 0.02 * nl;
  for (double &v : w.samples) v = v * scale + noise_amp * StandardNormal(rng);
  for (double &v : w.samples) v = std::clamp(v, -1.0, 32767.0 / 32768.0);
  return w;
}

Manifest ToyBenchManifest(const ToyBenchSpec &spec) {
  const std::vector<ToySpeaker> speakers = ToySpeakers(spec);
  std::vector<SpeakerRecord> srec;
  std::vector<UtteranceRecord> urec;
  const double seconds =
      static_cast<double>(static_cast<std::size_t>(spec.duration_s * kSampleRateHz)) /
      kSampleRateHz;
  for (int k = 0; k < spec.n_speakers; ++k) {
    const ToySpeaker &s = speakers[k];
    srec.push_back({s.speaker_id, s.gender, s.nationality, Split::kDev});
    for (int u = 0; u < spec.utterances_per_speaker; ++u) {
      const int v = u % spec.videos_per_speaker;
      const std::string video = VideoName(v);
      const std::string uid = s.speaker_id + "/" + video + "/" + UttName(spec, u);
      urec.push_back({uid, s.speaker_id, s.speaker_id + "-" + video,
                      "wav/" + uid + ".wav", seconds});
    }
  }
  return Manifest::Create(std::move(srec), std::move(urec));
}

std::string GenerateToyBench(const ToyBenchSpec &spec, const std::string &out_dir) {
  namespace fs = std::filesystem;
  const Manifest m = ToyBenchManifest(spec);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) Fail(ErrorKind::kIo, "cannot create " + out_dir + ": " + ec.message());
  const std::vector<ToySpeaker> speakers = ToySpeakers(spec);
  for (int k = 0; k < spec.n_speakers; ++k)
    for (int u = 0; u < spec.utterances_per_speaker; ++u) {
      const std::string uid = speakers[k].speaker_id + "/" +
                              VideoName(u % spec.videos_per_speaker) + "/" +
                              UttName(spec, u);
      const fs::path path = fs::path(out_dir) / m.FindUtterance(uid)->audio_path;
      fs::create_directories(path.parent_path(), ec);
      if (ec) Fail(ErrorKind::kIo, "cannot create " + path.parent_path().string());
      WriteWav(SynthesizeToyUtterance(spec, k, u % spec.videos_per_speaker, u),
               path.string());
    }
  const std::string manifest_path = (fs::path(out_dir) / "manifest.tsv").string();
  SaveManifest(m, manifest_path);
  return manifest_path;
}

}  // namespace vexkit
