// vexkit/trunk.h

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

#ifndef VEXKIT_TRUNK_H_
#define VEXKIT_TRUNK_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vexkit/frontend.h"
#include "vexkit/ndgrad/ops.h"
#include "vexkit/ndgrad/params.h"
#include "vexkit/ndgrad/tape.h"

namespace vexkit {

enum class TrunkFamily { kVggM, kResNet34, kResNet50 };

std::string_view TrunkFamilyName(TrunkFamily f);
std::optional<TrunkFamily> ParseTrunkFamily(std::string_view s);

struct Rational {
  int num = 1;
  int den = 1;
  double value() const { return static_cast<double>(num) / den; }
  bool operator==(const Rational &) const = default;
};

// Parses "1/8", "0.125" is rejected; integers ("1") are accepted.
std::optional<Rational> ParseRational(std::string_view s);
std::string FormatRational(Rational r);

struct TrunkConfig {
  TrunkFamily family = TrunkFamily::kResNet34;
  int num_classes = 5994;
  int embed_dim = 512;
  Rational width{1, 1};  // channel multiplier in (0, 1]
  int input_freq_bins = kFreqBins;

  void Validate() const;  // Error(kConfig)
  // Channel count after applying the width multiplier (at least 1).
  int Scale(int channels) const;
  // Stable hash of every field; stored in checkpoints.
  std::uint64_t Fingerprint() const;
};

enum class HeadKind { kClassification, kEmbedding };

struct ConvUnit {
  std::string name;
  int in = 1, out = 1;
  int kh = 1, kw = 1;
  int sh = 1, sw = 1;
  int ph = 0, pw = 0;
  bool relu = true;  // conv -> batchnorm [-> relu]
};

// One stage of the network.  Residual layers add `branch` to either the
// input or the projected `shortcut`, then apply ReLU.
struct TrunkLayer {
  enum class Kind { kConv, kMaxPool, kResidual, kPoolTime, kDense };
  Kind kind = Kind::kConv;
  std::string name;
  ConvUnit conv;
  ndgrad::PoolOptions pool;
  std::vector<ConvUnit> branch;
  std::optional<ConvUnit> shortcut;
  int dense_in = 0, dense_out = 0;
};

struct LayerShape {
  std::string name;
  int channels = 0, freq = 0, time = 0;
};

struct LayerParamCount {
  std::string layer;
  std::size_t count = 0;
};

template <typename T>
struct TrunkVars {
  ndgrad::Var<T> frame_features;  // N x C x F x T at the pool_time input
  ndgrad::Var<T> pooled;          // N x C
  std::optional<ndgrad::Var<T>> logits;
  std::optional<ndgrad::Var<T>> embedding;  // unit-normalised rows
};

template <typename T>
struct TrunkOutput {
  ndgrad::Tensor<T> frame_features;
  std::optional<ndgrad::Tensor<T>> logits;
  std::optional<ndgrad::Tensor<T>> embedding;
};

// Embedding network: convolutional trunk, frequency-support fc (9 x 1,
// valid), temporal average pooling, and either an identification or a
// 512-D embedding head.
template <typename T>
class Trunk {
 public:
  static Trunk Build(const TrunkConfig &cfg, std::uint64_t seed);

  const TrunkConfig &config() const { return config_; }
  HeadKind head() const { return head_; }
  ndgrad::ParamSet<T> &params() { return params_; }
  const ndgrad::ParamSet<T> &params() const { return params_; }
  const std::vector<TrunkLayer> &layers() const { return layers_; }

  // Input: N x 1 x freq_bins x frames.
  TrunkVars<T> Forward(ndgrad::Tape<T> &tape, ndgrad::Var<T> input,
                       ndgrad::BatchNormMode mode);
  // Up to (and including) the last layer before pool_time.
  ndgrad::Var<T> ForwardFeatures(ndgrad::Tape<T> &tape, ndgrad::Var<T> input,
                                 ndgrad::BatchNormMode mode);
  // pool_time and everything after it.
  TrunkVars<T> ForwardHead(ndgrad::Tape<T> &tape, ndgrad::Var<T> features,
                           ndgrad::BatchNormMode mode);

  // Tape-free inference convenience.
  TrunkOutput<T> Run(const ndgrad::Tensor<T> &input,
                     ndgrad::BatchNormMode mode = ndgrad::BatchNormMode::kEval);

  // Replaces the head.  Throws Error(kInvalidArgument) if the current head
  // is not `from`.  Trunk parameters are untouched; the new head is freshly
  // initialised from `seed`.
  void SwapHead(HeadKind from, HeadKind to, std::uint64_t seed);

  // Per-layer output shapes for an input of `frames` columns; throws
  // Error(kInvalidArgument) when the input is too short.
  std::vector<LayerShape> TraceShapes(int frames) const;
  // Temporal support seen by pool_time for `frames` input columns.
  int PoolTimeSupport(int frames) const;
  int MinFrames() const { return min_frames_; }

  std::vector<LayerParamCount> ParameterReport() const;
  // Weights of the frequency fc, and of a dense fc spanning the full
  // (freq x time) extent it would see on a 3 s crop.
  std::size_t FrequencyFcWeights() const;
  std::size_t DenseFcBaselineWeights() const;

 private:
  Trunk() = default;

  void AddConvParams(const ConvUnit &u, Rng &rng);
  void AddHead(HeadKind kind, Rng &rng);
  ndgrad::Var<T> ConvBn(ndgrad::Tape<T> &tape, ndgrad::Var<T> x,
                        const ConvUnit &u, ndgrad::BatchNormMode mode);
  ndgrad::Var<T> P(ndgrad::Tape<T> &tape, const std::string &name);

  TrunkConfig config_;
  std::vector<TrunkLayer> layers_;
  ndgrad::ParamSet<T> params_;
  HeadKind head_ = HeadKind::kClassification;
  int min_frames_ = 1;
};

// Packs equally long spectrograms into an N x 1 x 512 x T tensor.
template <typename T>
ndgrad::Tensor<T> MakeInputBatch(const std::vector<const Spectrogram *> &specs);

extern template class Trunk<float>;
extern template class Trunk<double>;

}  // namespace vexkit

#endif  // VEXKIT_TRUNK_H_
