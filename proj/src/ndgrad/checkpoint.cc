// ndgrad/checkpoint.cc

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

#include "vexkit/ndgrad/checkpoint.h"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "vexkit/errors.h"

namespace vexkit::ndgrad {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'V', 'X', 'C', 'K'};

template <typename U>
void Put(std::string &out, U v) {
  char b[sizeof(U)];
  std::memcpy(b, &v, sizeof(U));
  out.append(b, sizeof(U));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename U>
  U Get() {
    Need(sizeof(U));
    U v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }
  std::string_view Take(std::size_t n) {
    Need(n);
    std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void Need(std::size_t n) const {
    if (bytes_.size() - pos_ < n)
      Fail(ErrorKind::kData, "checkpoint truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string EncodeCheckpoint(const Checkpoint &ckpt) {
  std::string out(kMagic, 4);
  Put<std::uint32_t>(out, kCheckpointVersion);
  Put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.entries.size()));
  Put<std::uint64_t>(out, ckpt.fingerprint);
  for (const auto &e : ckpt.entries) {
    Put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out += e.name;
    Put<std::uint32_t>(out, static_cast<std::uint32_t>(e.value.rank()));
    for (int d : e.value.shape()) Put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    out.append(reinterpret_cast<const char *>(e.value.data()),
               e.value.size() * sizeof(float));
  }
  return out;
}

Checkpoint DecodeCheckpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.Take(4) != std::string_view(kMagic, 4))
    Fail(ErrorKind::kData, "not a checkpoint (bad magic)");
  const auto version = r.Get<std::uint32_t>();
  if (version != kCheckpointVersion)
    Fail(ErrorKind::kData,
         "unsupported checkpoint version " + std::to_string(version));
  const auto count = r.Get<std::uint32_t>();
  Checkpoint ckpt;
  ckpt.fingerprint = r.Get<std::uint64_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    e.name = std::string(r.Take(r.Get<std::uint32_t>()));
    const auto rank = r.Get<std::uint32_t>();
    if (rank > 8) Fail(ErrorKind::kData, "checkpoint entry rank too large");
    Shape shape(rank);
    for (auto &d : shape) {
      d = static_cast<int>(r.Get<std::uint32_t>());
      if (d <= 0) Fail(ErrorKind::kData, "checkpoint entry has zero dimension");
    }
    std::vector<float> values(NumElements(shape));
    std::string_view payload = r.Take(values.size() * sizeof(float));
    std::memcpy(values.data(), payload.data(), payload.size());
    e.value = Tensor<float>(std::move(shape), std::move(values));
    ckpt.entries.push_back(std::move(e));
  }
  if (!r.done()) Fail(ErrorKind::kData, "trailing bytes after checkpoint");
  return ckpt;
}

void WriteCheckpoint(const std::string &path, const Checkpoint &ckpt) {
  const std::string bytes = EncodeCheckpoint(ckpt);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) Fail(ErrorKind::kIo, "cannot write checkpoint '" + tmp + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) Fail(ErrorKind::kIo, "write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    Fail(ErrorKind::kIo, "cannot rename '" + tmp + "' to '" + path + "'");
}

Checkpoint ReadCheckpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open checkpoint '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return DecodeCheckpoint(bytes);
}

template <typename T>
Checkpoint ToCheckpoint(const ParamSet<T> &params, std::uint64_t fingerprint,
                        bool include_velocity) {
  Checkpoint ckpt;
  ckpt.fingerprint = fingerprint;
  for (const auto &p : params.items())
    ckpt.entries.push_back({p.name, p.value.template Cast<float>()});
  if (include_velocity)
    for (const auto &p : params.items())
      if (p.trainable)
        ckpt.entries.push_back({std::string(kVelocityPrefix) + p.name,
                                p.velocity.template Cast<float>()});
  return ckpt;
}

template <typename T>
void RestoreCheckpoint(const Checkpoint &ckpt, ParamSet<T> &params,
                       std::uint64_t expected_fingerprint) {
  if (ckpt.fingerprint != expected_fingerprint)
    Fail(ErrorKind::kData,
         "checkpoint was written for a different configuration");
  std::map<std::string, const Tensor<float> *> values, velocities;
  for (const auto &e : ckpt.entries) {
    if (e.name.rfind(kVelocityPrefix, 0) == 0)
      velocities[e.name.substr(kVelocityPrefix.size())] = &e.value;
    else
      values[e.name] = &e.value;
  }
  if (values.size() != params.size())
    Fail(ErrorKind::kData, "checkpoint holds " + std::to_string(values.size()) +
                               " parameters, model has " +
                               std::to_string(params.size()));
  for (auto &p : params.items()) {
    auto it = values.find(p.name);
    if (it == values.end())
      Fail(ErrorKind::kData, "checkpoint lacks parameter '" + p.name + "'");
    if (it->second->shape() != p.value.shape())
      Fail(ErrorKind::kData, "shape mismatch for '" + p.name + "'");
    p.value = it->second->template Cast<T>();
    auto vit = velocities.find(p.name);
    if (vit != velocities.end()) {
      if (vit->second->shape() != p.value.shape())
        Fail(ErrorKind::kData, "velocity shape mismatch for '" + p.name + "'");
      p.velocity = vit->second->template Cast<T>();
    } else {
      p.velocity.Fill(T(0));
    }
  }
}

template Checkpoint ToCheckpoint(const ParamSet<float> &, std::uint64_t, bool);
template Checkpoint ToCheckpoint(const ParamSet<double> &, std::uint64_t, bool);
template void RestoreCheckpoint(const Checkpoint &, ParamSet<float> &, std::uint64_t);
template void RestoreCheckpoint(const Checkpoint &, ParamSet<double> &, std::uint64_t);

}  // namespace vexkit::ndgrad
