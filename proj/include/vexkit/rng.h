// vexkit/rng.h

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

#ifndef VEXKIT_RNG_H_
#define VEXKIT_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace vexkit {

using Rng = std::mt19937_64;

// Derives an independent generator from a master seed, a stream name
// ("init", "pairs", "mining", ...) and an index (typically the epoch).
// The result depends only on the three arguments, so any epoch can be
// replayed without carrying generator state across runs.
Rng SubStream(std::uint64_t seed, std::string_view name,
              std::uint64_t index = 0);

std::uint64_t HashString(std::string_view s);
std::uint64_t MixHash(std::uint64_t a, std::uint64_t b);

// Uniform integer in [0, n) that does not depend on the standard library's
// distribution implementation.
std::uint64_t UniformIndex(Rng &rng, std::uint64_t n);
double UniformUnit(Rng &rng);  // in [0, 1)
double StandardNormal(Rng &rng);

}  // namespace vexkit

#endif  // VEXKIT_RNG_H_
