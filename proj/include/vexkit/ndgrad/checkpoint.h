// vexkit/ndgrad/checkpoint.h

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

#ifndef VEXKIT_NDGRAD_CHECKPOINT_H_
#define VEXKIT_NDGRAD_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vexkit/ndgrad/params.h"

namespace vexkit::ndgrad {

// Binary layout (little-endian):
//   "VXCK" | u32 version | u32 entry count | u64 config fingerprint
//   per entry: u32 name length | name | u32 rank | u32 dims[rank] |
//              float32 payload[prod(dims)]
struct CheckpointEntry {
  std::string name;
  Tensor<float> value;

  bool operator==(const CheckpointEntry &) const = default;
};

struct Checkpoint {
  std::uint64_t fingerprint = 0;
  std::vector<CheckpointEntry> entries;

  bool operator==(const Checkpoint &) const = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::string_view kVelocityPrefix = "velocity:";

std::string EncodeCheckpoint(const Checkpoint &ckpt);
Checkpoint DecodeCheckpoint(std::string_view bytes);

// Writes through a temporary file and renames, so a reader never observes a
// half-written checkpoint.
void WriteCheckpoint(const std::string &path, const Checkpoint &ckpt);
Checkpoint ReadCheckpoint(const std::string &path);

template <typename T>
Checkpoint ToCheckpoint(const ParamSet<T> &params, std::uint64_t fingerprint,
                        bool include_velocity);

// Copies values (and velocities when present) into an existing ParamSet.
// The set of parameter names and shapes must match exactly, and the
// fingerprint must equal `expected_fingerprint`; otherwise Error(kData).
template <typename T>
void RestoreCheckpoint(const Checkpoint &ckpt, ParamSet<T> &params,
                       std::uint64_t expected_fingerprint);

}  // namespace vexkit::ndgrad

#endif  // VEXKIT_NDGRAD_CHECKPOINT_H_
