// wav.cc

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

#include "vexkit/wav.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "vexkit/errors.h"

namespace vexkit {

static_assert(std::endian::native == std::endian::little,
              "wav I/O assumes a little-endian host");

namespace {

template <typename T>
T ReadLe(const std::vector<char> &buf, std::size_t off) {
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  return v;
}

template <typename T>
void PutLe(std::string &out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.append(b, sizeof(T));
}

}  // namespace

Waveform ReadWav(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open wav '" + path + "'");
  std::vector<char> buf((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  auto bad = [&](const std::string &why) {
    Fail(ErrorKind::kData, "wav '" + path + "': " + why);
  };
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    bad("not a RIFF/WAVE file");

  bool have_fmt = false;
  std::size_t off = 12;
  while (off + 8 <= buf.size()) {
    std::uint32_t size = ReadLe<std::uint32_t>(buf, off + 4);
    std::size_t body = off + 8;
    if (body + size > buf.size()) bad("truncated chunk");
    if (std::memcmp(buf.data() + off, "fmt ", 4) == 0) {
      if (size < 16) bad("short fmt chunk");
      auto format = ReadLe<std::uint16_t>(buf, body);
      auto channels = ReadLe<std::uint16_t>(buf, body + 2);
      auto rate = ReadLe<std::uint32_t>(buf, body + 4);
      auto bits = ReadLe<std::uint16_t>(buf, body + 14);
      if (format != 1) bad("only PCM format is supported");
      if (channels != 1) bad("expected mono, got " + std::to_string(channels) +
                             " channels");
      if (bits != 16) bad("expected 16-bit samples, got " +
                          std::to_string(bits));
      if (rate != static_cast<std::uint32_t>(kSampleRateHz))
        bad("expected 16000 Hz, got " + std::to_string(rate));
      have_fmt = true;
    } else if (std::memcmp(buf.data() + off, "data", 4) == 0) {
      if (!have_fmt) bad("data chunk before fmt chunk");
      Waveform w;
      w.sample_rate_hz = kSampleRateHz;
      w.samples.resize(size / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i)
        w.samples[i] = ReadLe<std::int16_t>(buf, body + 2 * i) / 32768.0;
      return w;
    }
    off = body + size + (size & 1);
  }
  Fail(ErrorKind::kData, "wav '" + path + "': no data chunk");
}

void WriteWav(const Waveform &w, const std::string &path) {
  if (w.sample_rate_hz != kSampleRateHz)
    Fail(ErrorKind::kInvalidArgument, "WriteWav: sample rate must be 16000");
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(w.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutLe<std::uint32_t>(out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutLe<std::uint32_t>(out, 16);
  PutLe<std::uint16_t>(out, 1);
  PutLe<std::uint16_t>(out, 1);
  PutLe<std::uint32_t>(out, kSampleRateHz);
  PutLe<std::uint32_t>(out, kSampleRateHz * 2);
  PutLe<std::uint16_t>(out, 2);
  PutLe<std::uint16_t>(out, 16);
  out += "data";
  PutLe<std::uint32_t>(out, data_bytes);
  for (double s : w.samples) {
    double v = std::round(s * 32768.0);
    v = std::clamp(v, -32768.0, 32767.0);
    PutLe<std::int16_t>(out, static_cast<std::int16_t>(v));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) Fail(ErrorKind::kIo, "cannot write wav '" + path + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) Fail(ErrorKind::kIo, "write failed for '" + path + "'");
}

}  // namespace vexkit
