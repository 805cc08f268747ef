// trunk.cc

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

#include "vexkit/trunk.h"

#include <charconv>
#include <cmath>
#include <map>

#include "vexkit/errors.h"
#include "vexkit/rng.h"

namespace vexkit {

using ndgrad::BatchNormMode;
using ndgrad::Tape;
using ndgrad::Tensor;
using ndgrad::Var;

std::string_view TrunkFamilyName(TrunkFamily f) {
  switch (f) {
    case TrunkFamily::kVggM:
      return "vggm";
    case TrunkFamily::kResNet34:
      return "resnet34";
    default:
      return "resnet50";
  }
}

std::optional<TrunkFamily> ParseTrunkFamily(std::string_view s) {
  if (s == "vggm") return TrunkFamily::kVggM;
  if (s == "resnet34") return TrunkFamily::kResNet34;
  if (s == "resnet50") return TrunkFamily::kResNet50;
  return std::nullopt;
}

std::optional<Rational> ParseRational(std::string_view s) {
  Rational r;
  auto slash = s.find('/');
  auto parse_int = [](std::string_view t, int &out) {
    auto res = std::from_chars(t.data(), t.data() + t.size(), out);
    return res.ec == std::errc() && res.ptr == t.data() + t.size();
  };
  if (slash == std::string_view::npos) {
    if (!parse_int(s, r.num)) return std::nullopt;
    r.den = 1;
  } else if (!parse_int(s.substr(0, slash), r.num) ||
             !parse_int(s.substr(slash + 1), r.den)) {
    return std::nullopt;
  }
  if (r.den <= 0) return std::nullopt;
  return r;
}

std::string FormatRational(Rational r) {
  return std::to_string(r.num) + "/" + std::to_string(r.den);
}

void TrunkConfig::Validate() const {
  auto bad = [](const std::string &m) { Fail(ErrorKind::kConfig, "trunk: " + m); };
  if (num_classes < 1) bad("num_classes must be positive");
  if (embed_dim < 1) bad("embed_dim must be positive");
  if (width.den <= 0 || width.num <= 0 || width.num > width.den)
    bad("width multiplier must lie in (0, 1], got " + FormatRational(width));
  if (input_freq_bins != kFreqBins)
    bad("input_freq_bins must be 512, got " + std::to_string(input_freq_bins));
}

int TrunkConfig::Scale(int channels) const {
  return std::max(1, static_cast<int>(static_cast<long long>(channels) *
                                      width.num / width.den));
}

std::uint64_t TrunkConfig::Fingerprint() const {
  std::uint64_t h = HashString("vexkit-trunk");
  for (std::uint64_t v :
       {static_cast<std::uint64_t>(family), static_cast<std::uint64_t>(num_classes),
        static_cast<std::uint64_t>(embed_dim), static_cast<std::uint64_t>(width.num),
        static_cast<std::uint64_t>(width.den),
        static_cast<std::uint64_t>(input_freq_bins)})
    h = MixHash(h, v);
  return h;
}

namespace {

TrunkLayer ConvLayer(ConvUnit u) {
  TrunkLayer l;
  l.kind = TrunkLayer::Kind::kConv;
  l.name = u.name;
  l.conv = std::move(u);
  return l;
}

TrunkLayer PoolLayer(std::string name, int wh, int ww, int sh, int sw, int ph,
                     int pw) {
  TrunkLayer l;
  l.kind = TrunkLayer::Kind::kMaxPool;
  l.name = std::move(name);
  l.pool = {wh, ww, sh, sw, ph, pw};
  return l;
}

TrunkLayer PoolTimeLayer() {
  TrunkLayer l;
  l.kind = TrunkLayer::Kind::kPoolTime;
  l.name = "pool_time";
  return l;
}

// VGG-M as adapted for spectrograms in the VoxCeleb1 baseline: the image
// fc6 becomes a 9 x 1 frequency fc followed by temporal average pooling.
// Layer widths and strides are a reconstruction of that network.
std::vector<TrunkLayer> VggMLayers(const TrunkConfig &cfg) {
  auto S = [&](int c) { return cfg.Scale(c); };
  std::vector<TrunkLayer> layers;
  layers.push_back(ConvLayer({"conv1", 1, S(96), 7, 7, 2, 2, 3, 3}));
  layers.push_back(PoolLayer("mpool1", 3, 3, 2, 2, 0, 0));
  layers.push_back(ConvLayer({"conv2", S(96), S(256), 5, 5, 2, 2, 1, 1}));
  layers.push_back(PoolLayer("mpool2", 3, 3, 2, 2, 0, 0));
  layers.push_back(ConvLayer({"conv3", S(256), S(384), 3, 3, 1, 1, 1, 1}));
  layers.push_back(ConvLayer({"conv4", S(384), S(256), 3, 3, 1, 1, 1, 1}));
  layers.push_back(ConvLayer({"conv5", S(256), S(256), 3, 3, 1, 1, 1, 1}));
  layers.push_back(PoolLayer("mpool5", 5, 3, 3, 2, 0, 0));
  layers.push_back(ConvLayer({"fc6", S(256), S(4096), 9, 1, 1, 1, 0, 0}));
  layers.push_back(PoolTimeLayer());
  TrunkLayer fc7;
  fc7.kind = TrunkLayer::Kind::kDense;
  fc7.name = "fc7";
  fc7.dense_in = S(4096);
  fc7.dense_out = S(1024);
  layers.push_back(fc7);
  return layers;
}

std::vector<TrunkLayer> ResNetLayers(const TrunkConfig &cfg) {
  auto S = [&](int c) { return cfg.Scale(c); };
  const bool bottleneck = cfg.family == TrunkFamily::kResNet50;
  const int widths[4] = {64, 128, 256, 512};
  const int blocks[4] = {3, 4, 6, 3};
  std::vector<TrunkLayer> layers;
  layers.push_back(ConvLayer({"conv1", 1, S(64), 7, 7, 2, 2, 3, 3}));
  layers.push_back(PoolLayer("pool1", 3, 3, 2, 2, 1, 1));
  int in = S(64);
  for (int stage = 0; stage < 4; ++stage) {
    const int mid = S(widths[stage]);
    const int out = bottleneck ? S(4 * widths[stage]) : mid;
    for (int b = 0; b < blocks[stage]; ++b) {
      const int stride = (stage > 0 && b == 0) ? 2 : 1;
      TrunkLayer l;
      l.kind = TrunkLayer::Kind::kResidual;
      l.name = "conv" + std::to_string(stage + 2) + "_" + std::to_string(b + 1);
      if (bottleneck) {
        l.branch.push_back({l.name + ".a", in, mid, 1, 1, 1, 1, 0, 0});
        l.branch.push_back({l.name + ".b", mid, mid, 3, 3, stride, stride, 1, 1});
        l.branch.push_back({l.name + ".c", mid, out, 1, 1, 1, 1, 0, 0, false});
      } else {
        l.branch.push_back({l.name + ".a", in, out, 3, 3, stride, stride, 1, 1});
        l.branch.push_back({l.name + ".b", out, out, 3, 3, 1, 1, 1, 1, false});
      }
      if (stride != 1 || in != out)
        l.shortcut = ConvUnit{l.name + ".proj", in, out, 1, 1, stride, stride,
                              0, 0, false};
      layers.push_back(std::move(l));
      in = out;
    }
  }
  const int fc_out = bottleneck ? S(2048) : S(512);
  layers.push_back(ConvLayer({"fc1", in, fc_out, 9, 1, 1, 1, 0, 0}));
  layers.push_back(PoolTimeLayer());
  return layers;
}

bool Apply(const ConvUnit &u, LayerShape &s) {
  if (s.channels != u.in) return false;
  s.freq = ndgrad::ConvOutSize(s.freq, u.kh, u.sh, u.ph);
  s.time = ndgrad::ConvOutSize(s.time, u.kw, u.sw, u.pw);
  s.channels = u.out;
  return s.freq >= 1 && s.time >= 1;
}

int PooledChannels(const std::vector<TrunkLayer> &layers) {
  int c = 0;
  for (const auto &l : layers) {
    if (l.kind == TrunkLayer::Kind::kConv) c = l.conv.out;
    if (l.kind == TrunkLayer::Kind::kResidual) c = l.branch.back().out;
    if (l.kind == TrunkLayer::Kind::kPoolTime) return c;
  }
  return c;
}

int HeadInput(const std::vector<TrunkLayer> &layers) {
  int c = PooledChannels(layers);
  for (const auto &l : layers)
    if (l.kind == TrunkLayer::Kind::kDense) c = l.dense_out;
  return c;
}

template <typename T>
Tensor<T> RandomNormal(ndgrad::Shape shape, double stddev, Rng &rng) {
  Tensor<T> t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<T>(stddev * StandardNormal(rng));
  return t;
}

}  // namespace

template <typename T>
Trunk<T> Trunk<T>::Build(const TrunkConfig &cfg, std::uint64_t seed) {
  cfg.Validate();
  Trunk<T> t;
  t.config_ = cfg;
  t.layers_ = cfg.family == TrunkFamily::kVggM ? VggMLayers(cfg) : ResNetLayers(cfg);
  Rng rng = SubStream(seed, "init");
  for (const auto &l : t.layers_) {
    switch (l.kind) {
      case TrunkLayer::Kind::kConv:
        t.AddConvParams(l.conv, rng);
        break;
      case TrunkLayer::Kind::kResidual:
        for (const auto &u : l.branch) t.AddConvParams(u, rng);
        if (l.shortcut) t.AddConvParams(*l.shortcut, rng);
        break;
      case TrunkLayer::Kind::kDense: {
        const int c = l.dense_out;
        t.params_.Add(l.name + ".weight",
                      RandomNormal<T>({c, l.dense_in}, std::sqrt(2.0 / l.dense_in), rng));
        t.params_.Add(l.name + ".bn.gamma", Tensor<T>({c}, T(1)));
        t.params_.Add(l.name + ".bn.beta", Tensor<T>({c}, T(0)));
        t.params_.Add(l.name + ".bn.running_mean", Tensor<T>({c}, T(0)), false);
        t.params_.Add(l.name + ".bn.running_var", Tensor<T>({c}, T(1)), false);
        break;
      }
      default:
        break;
    }
  }
  t.AddHead(HeadKind::kClassification, rng);
  t.min_frames_ = 0;
  for (int f = 1; f < 100000 && t.min_frames_ == 0; ++f) {
    try {
      t.TraceShapes(f);
      t.min_frames_ = f;
    } catch (const Error &) {
    }
  }
  if (t.min_frames_ == 0)
    Fail(ErrorKind::kConfig, "trunk accepts no input length");
  return t;
}

template <typename T>
void Trunk<T>::AddConvParams(const ConvUnit &u, Rng &rng) {
  const int fan_in = u.in * u.kh * u.kw;
  params_.Add(u.name + ".weight",
              RandomNormal<T>({u.out, u.in, u.kh, u.kw}, std::sqrt(2.0 / fan_in), rng));
  params_.Add(u.name + ".bn.gamma", Tensor<T>({u.out}, T(1)));
  params_.Add(u.name + ".bn.beta", Tensor<T>({u.out}, T(0)));
  params_.Add(u.name + ".bn.running_mean", Tensor<T>({u.out}, T(0)), false);
  params_.Add(u.name + ".bn.running_var", Tensor<T>({u.out}, T(1)), false);
}

template <typename T>
void Trunk<T>::AddHead(HeadKind kind, Rng &rng) {
  const int in = HeadInput(layers_);
  const int out = kind == HeadKind::kClassification ? config_.num_classes
                                                     : config_.embed_dim;
  const std::string prefix =
      kind == HeadKind::kClassification ? "head.cls" : "head.emb";
  params_.Add(prefix + ".weight",
              RandomNormal<T>({out, in}, std::sqrt(1.0 / in), rng));
  params_.Add(prefix + ".bias", Tensor<T>({out}, T(0)));
  head_ = kind;
}

template <typename T>
void Trunk<T>::SwapHead(HeadKind from, HeadKind to, std::uint64_t seed) {
  if (head_ != from)
    Fail(ErrorKind::kInvalidArgument, "swap_head: current head does not match");
  params_.RemovePrefix("head.");
  Rng rng = SubStream(seed, "init.head", static_cast<std::uint64_t>(to));
  AddHead(to, rng);
}

template <typename T>
Var<T> Trunk<T>::P(Tape<T> &tape, const std::string &name) {
  return tape.Param(params_.Get(name));
}

template <typename T>
Var<T> Trunk<T>::ConvBn(Tape<T> &tape, Var<T> x, const ConvUnit &u,
                        BatchNormMode mode) {
  Var<T> y = ndgrad::Conv2d<T>(x, P(tape, u.name + ".weight"), std::nullopt,
                               {u.sh, u.sw, u.ph, u.pw});
  y = ndgrad::BatchNorm<T>(y, P(tape, u.name + ".bn.gamma"),
                           P(tape, u.name + ".bn.beta"),
                           params_.Get(u.name + ".bn.running_mean").value,
                           params_.Get(u.name + ".bn.running_var").value, mode);
  return u.relu ? ndgrad::Relu(y) : y;
}

template <typename T>
Var<T> Trunk<T>::ForwardFeatures(Tape<T> &tape, Var<T> input,
                                 BatchNormMode mode) {
  const auto &s = input.shape();
  if (s.size() != 4 || s[1] != 1 || s[2] != config_.input_freq_bins)
    Fail(ErrorKind::kInvalidArgument,
         "trunk input must be N x 1 x 512 x T, got " + ndgrad::ShapeString(s));
  if (s[3] < MinFrames())
    Fail(ErrorKind::kInvalidArgument,
         "input of " + std::to_string(s[3]) + " frames is shorter than the " +
             std::to_string(MinFrames()) + "-frame minimum");
  Var<T> x = input;
  for (const auto &l : layers_) {
    if (l.kind == TrunkLayer::Kind::kPoolTime) break;
    switch (l.kind) {
      case TrunkLayer::Kind::kConv:
        x = ConvBn(tape, x, l.conv, mode);
        break;
      case TrunkLayer::Kind::kMaxPool:
        x = ndgrad::MaxPool2d(x, l.pool);
        break;
      case TrunkLayer::Kind::kResidual: {
        Var<T> y = x;
        for (const auto &u : l.branch) y = ConvBn(tape, y, u, mode);
        Var<T> sc = l.shortcut ? ConvBn(tape, x, *l.shortcut, mode) : x;
        x = ndgrad::Relu(ndgrad::Add(y, sc));
        break;
      }
      default:
        break;
    }
  }
  return x;
}

template <typename T>
TrunkVars<T> Trunk<T>::ForwardHead(Tape<T> &tape, Var<T> features,
                                   BatchNormMode mode) {
  TrunkVars<T> out;
  out.frame_features = features;
  out.pooled = ndgrad::GlobalAvgPool(features);
  Var<T> z = out.pooled;
  bool after_pool = false;
  for (const auto &l : layers_) {
    if (l.kind == TrunkLayer::Kind::kPoolTime) after_pool = true;
    if (!after_pool || l.kind != TrunkLayer::Kind::kDense) continue;
    z = ndgrad::Linear<T>(z, P(tape, l.name + ".weight"), std::nullopt);
    z = ndgrad::BatchNorm<T>(z, P(tape, l.name + ".bn.gamma"),
                             P(tape, l.name + ".bn.beta"),
                             params_.Get(l.name + ".bn.running_mean").value,
                             params_.Get(l.name + ".bn.running_var").value, mode);
    z = ndgrad::Relu(z);
  }
  if (head_ == HeadKind::kClassification) {
    out.logits = ndgrad::Linear<T>(z, P(tape, "head.cls.weight"),
                                   P(tape, "head.cls.bias"));
  } else {
    out.embedding = ndgrad::L2Normalize(ndgrad::Linear<T>(
        z, P(tape, "head.emb.weight"), P(tape, "head.emb.bias")));
  }
  return out;
}

template <typename T>
TrunkVars<T> Trunk<T>::Forward(Tape<T> &tape, Var<T> input, BatchNormMode mode) {
  return ForwardHead(tape, ForwardFeatures(tape, input, mode), mode);
}

template <typename T>
TrunkOutput<T> Trunk<T>::Run(const Tensor<T> &input, BatchNormMode mode) {
  Tape<T> tape(false);
  TrunkVars<T> v = Forward(tape, tape.Constant(input), mode);
  TrunkOutput<T> out;
  out.frame_features = v.frame_features.value();
  if (v.logits) out.logits = v.logits->value();
  if (v.embedding) out.embedding = v.embedding->value();
  return out;
}

template <typename T>
std::vector<LayerShape> Trunk<T>::TraceShapes(int frames) const {
  std::vector<LayerShape> trace;
  LayerShape s{"input", 1, config_.input_freq_bins, frames};
  auto too_short = [&](const std::string &where) {
    Fail(ErrorKind::kInvalidArgument,
         "input of " + std::to_string(frames) + " frames too short at " + where);
  };
  if (frames < 1) too_short("input");
  trace.push_back(s);
  for (const auto &l : layers_) {
    switch (l.kind) {
      case TrunkLayer::Kind::kConv:
        if (!Apply(l.conv, s)) too_short(l.name);
        break;
      case TrunkLayer::Kind::kMaxPool:
        s.freq = ndgrad::ConvOutSize(s.freq, l.pool.window_h, l.pool.stride_h, l.pool.pad_h);
        s.time = ndgrad::ConvOutSize(s.time, l.pool.window_w, l.pool.stride_w, l.pool.pad_w);
        if (s.freq < 1 || s.time < 1) too_short(l.name);
        break;
      case TrunkLayer::Kind::kResidual: {
        LayerShape main = s;
        for (const auto &u : l.branch)
          if (!Apply(u, main)) too_short(u.name);
        s = main;
        break;
      }
      case TrunkLayer::Kind::kPoolTime:
        // Reported with the extent being averaged.
        break;
      case TrunkLayer::Kind::kDense:
        s = {l.name, l.dense_out, 1, 1};
        break;
    }
    s.name = l.name;
    trace.push_back(s);
    if (l.kind == TrunkLayer::Kind::kPoolTime) {
      s.freq = 1;
      s.time = 1;
    }
  }
  return trace;
}

template <typename T>
int Trunk<T>::PoolTimeSupport(int frames) const {
  for (const auto &s : TraceShapes(frames))
    if (s.name == "pool_time") return s.time;
  return 0;
}


template <typename T>
std::vector<LayerParamCount> Trunk<T>::ParameterReport() const {
  std::vector<LayerParamCount> report;
  for (const auto &p : params_.items()) {
    if (!p.trainable) continue;
    std::string layer = p.name.substr(0, p.name.find('.'));
    if (layer == "head") layer = p.name.substr(0, p.name.find('.', 5));
    if (report.empty() || report.back().layer != layer)
      report.push_back({layer, 0});
    report.back().count += p.value.size();
  }
  return report;
}

template <typename T>
std::size_t Trunk<T>::FrequencyFcWeights() const {
  for (const auto &l : layers_)
    if (l.kind == TrunkLayer::Kind::kConv && l.conv.kh == 9 && l.conv.kw == 1)
      return params_.Get(l.name + ".weight").value.size();
  return 0;
}

template <typename T>
std::size_t Trunk<T>::DenseFcBaselineWeights() const {
  for (const auto &l : layers_)
    if (l.kind == TrunkLayer::Kind::kConv && l.conv.kh == 9 && l.conv.kw == 1) {
      // Dense layer covering the whole 9 x n map the frequency fc sees on a
      // 3 s crop.
      const int n = PoolTimeSupport(kCropFrames);
      return static_cast<std::size_t>(9) * n * l.conv.in * l.conv.out;
    }
  return 0;
}

template <typename T>
Tensor<T> MakeInputBatch(const std::vector<const Spectrogram *> &specs) {
  if (specs.empty()) Fail(ErrorKind::kInvalidArgument, "empty batch");
  const int F = specs[0]->freq_bins(), Tn = specs[0]->frames();
  Tensor<T> t({static_cast<int>(specs.size()), 1, F, Tn});
  T *d = t.data();
  for (const Spectrogram *s : specs) {
    if (s->freq_bins() != F || s->frames() != Tn)
      Fail(ErrorKind::kInvalidArgument, "batch spectrograms differ in size");
    for (Eigen::Index i = 0; i < s->values.size(); ++i)
      *d++ = static_cast<T>(s->values.data()[i]);
  }
  return t;
}

template class Trunk<float>;
template class Trunk<double>;
template Tensor<float> MakeInputBatch(const std::vector<const Spectrogram *> &);
template Tensor<double> MakeInputBatch(const std::vector<const Spectrogram *> &);

}  // namespace vexkit
