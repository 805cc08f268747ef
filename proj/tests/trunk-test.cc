// tests/trunk-test.cc

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

#include <algorithm>
#include <map>

#include "doctest.h"
#include "vexkit/errors.h"
#include "vexkit/trunk.h"

using namespace vexkit;
using namespace vexkit::ndgrad;

namespace {

TrunkConfig Config(TrunkFamily f, Rational width = {1, 1}) {
  TrunkConfig c;
  c.family = f;
  c.width = width;
  return c;
}

std::map<int, int> BlocksPerStage(const std::vector<TrunkLayer> &layers) {
  std::map<int, int> blocks;
  for (const auto &l : layers)
    if (l.kind == TrunkLayer::Kind::kResidual) ++blocks[l.name[4] - '0'];
  return blocks;
}

LayerShape ShapeAt(const std::vector<LayerShape> &trace, const std::string &name) {
  for (const auto &s : trace)
    if (s.name == name) return s;
  FAIL("no layer " << name);
  return {};
}

Tensor<double> RandomInput(int n, int frames, Rng &rng) {
  Tensor<double> t({n, 1, 512, frames});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = StandardNormal(rng);
  return t;
}

}  // namespace

TEST_CASE("config validation and parsing") {
  CHECK(ParseTrunkFamily("vggm") == TrunkFamily::kVggM);
  CHECK(!ParseTrunkFamily("resnet18"));
  CHECK(ParseRational("1/8") == Rational{1, 8});
  CHECK(ParseRational("1") == Rational{1, 1});
  TrunkConfig c;
  c.width = {3, 2};
  CHECK_THROWS_AS(c.Validate(), Error);
  c.width = {0, 1};
  CHECK_THROWS_AS(c.Validate(), Error);
  c.width = {1, 8};
  c.embed_dim = 0;
  CHECK_THROWS_AS(c.Validate(), Error);
  CHECK(Config(TrunkFamily::kResNet34).Fingerprint() !=
        Config(TrunkFamily::kResNet34, {1, 8}).Fingerprint());
}

TEST_CASE("resnet34 full width layout") {
  auto t = Trunk<float>::Build(Config(TrunkFamily::kResNet34), 1);
  CHECK(BlocksPerStage(t.layers()) == std::map<int, int>{{2, 3}, {3, 4}, {4, 6}, {5, 3}});
  const auto &p = t.params();
  CHECK(p.Get("conv1.weight").value.shape() == Shape{64, 1, 7, 7});
  CHECK(p.Get("conv2_1.a.weight").value.shape() == Shape{64, 64, 3, 3});
  CHECK(p.Get("conv3_1.a.weight").value.shape() == Shape{128, 64, 3, 3});
  CHECK(p.Get("conv4_1.a.weight").value.shape() == Shape{256, 128, 3, 3});
  CHECK(p.Get("conv5_3.b.weight").value.shape() == Shape{512, 512, 3, 3});
  CHECK(p.Get("fc1.weight").value.shape() == Shape{512, 512, 9, 1});
  CHECK(p.Get("head.cls.weight").value.shape() == Shape{5994, 512});
  // stride 2 on the first block of stages 3-5 only
  for (const auto &l : t.layers())
    if (l.kind == TrunkLayer::Kind::kResidual) {
      const bool first = l.name.back() == '1' && l.name[4] != '2';
      CHECK(l.branch.front().sh == (first ? 2 : 1));
      CHECK(l.shortcut.has_value() == first);
    }

  auto trace = t.TraceShapes(300);
  CHECK(ShapeAt(trace, "conv1").freq == 256);
  CHECK(ShapeAt(trace, "conv1").time == 150);
  CHECK(ShapeAt(trace, "pool1").time == 75);
  CHECK(ShapeAt(trace, "conv3_4").time == 38);
  CHECK(ShapeAt(trace, "conv4_6").time == 19);
  LayerShape before_fc1 = ShapeAt(trace, "conv5_3");
  CHECK(before_fc1.freq == 16);
  CHECK(before_fc1.time == 10);
  CHECK(before_fc1.channels == 512);
  CHECK(ShapeAt(trace, "fc1").freq == 8);
  CHECK(t.PoolTimeSupport(300) == 10);
}

TEST_CASE("resnet50 full width layout") {
  auto t = Trunk<float>::Build(Config(TrunkFamily::kResNet50), 1);
  CHECK(BlocksPerStage(t.layers()) == std::map<int, int>{{2, 3}, {3, 4}, {4, 6}, {5, 3}});
  CHECK(t.params().Get("conv2_1.c.weight").value.dim(0) == 256);
  CHECK(t.params().Get("conv5_3.c.weight").value.dim(0) == 2048);
  CHECK(t.params().Get("fc1.weight").value.shape() == Shape{2048, 2048, 9, 1});
  CHECK(ShapeAt(t.TraceShapes(300), "fc1").channels == 2048);
}

TEST_CASE("width multiplier divides channels only") {
  auto full = Trunk<float>::Build(Config(TrunkFamily::kResNet34), 1);
  auto eighth = Trunk<float>::Build(Config(TrunkFamily::kResNet34, {1, 8}), 1);
  CHECK(BlocksPerStage(eighth.layers()) == BlocksPerStage(full.layers()));
  REQUIRE(full.params().items().size() == eighth.params().items().size());
  for (std::size_t i = 0; i < full.params().items().size(); ++i) {
    const auto &a = full.params().items()[i];
    const auto &b = eighth.params().items()[i];
    CHECK(a.name == b.name);
    if (a.name.rfind("head.", 0) == 0 || a.value.rank() != 4) continue;
    CHECK(b.value.dim(0) * 8 == a.value.dim(0));
    if (a.name != "conv1.weight") CHECK(b.value.dim(1) * 8 == a.value.dim(1));
  }
}

TEST_CASE("vgg-m temporal support and parameter reduction") {
  auto t = Trunk<float>::Build(Config(TrunkFamily::kVggM), 1);
  CHECK(t.PoolTimeSupport(300) == 8);
  auto trace = t.TraceShapes(300);
  CHECK(ShapeAt(trace, "mpool5").freq == 9);
  CHECK(ShapeAt(trace, "fc6").freq == 1);
  CHECK(ShapeAt(trace, "fc6").channels == 4096);
  CHECK(ShapeAt(trace, "fc7").channels == 1024);

  std::size_t fc6 = 0;
  for (const auto &r : t.ParameterReport())
    if (r.layer == "fc6") fc6 = r.count;
  CHECK(fc6 >= t.FrequencyFcWeights());
  CHECK(t.FrequencyFcWeights() == 9u * 256 * 4096);
  CHECK(t.DenseFcBaselineWeights() == 9u * 8 * 256 * 4096);
  CHECK(5 * fc6 <= t.DenseFcBaselineWeights());
}

TEST_CASE("forward contract") {
  Rng rng = SubStream(11, "t");
  auto t = Trunk<double>::Build(Config(TrunkFamily::kResNet34, {1, 16}), 3);
  // padded convs let a residual trunk accept a single frame
  CHECK(t.MinFrames() == 1);
  auto vgg = Trunk<double>::Build(Config(TrunkFamily::kVggM, {1, 16}), 3);
  CHECK(vgg.MinFrames() > 1);
  CHECK_NOTHROW(vgg.TraceShapes(vgg.MinFrames()));
  CHECK_THROWS_AS(vgg.TraceShapes(vgg.MinFrames() - 1), Error);
  CHECK_THROWS_AS(vgg.Run(RandomInput(1, vgg.MinFrames() - 1, rng)), Error);
  CHECK(vgg.Run(RandomInput(1, vgg.MinFrames(), rng)).logits->dim(1) == 5994);
  t.SwapHead(HeadKind::kClassification, HeadKind::kEmbedding, 3);
  for (int frames : {t.MinFrames(), 173, 300, 457}) {
    auto out = t.Run(RandomInput(1, frames, rng));
    REQUIRE(out.embedding);
    CHECK(out.embedding->shape() == Shape{1, 512});
    CHECK(!out.logits);
  }
  CHECK_THROWS_AS(t.Run(Tensor<double>({1, 1, 256, 300})), Error);

  auto x = RandomInput(2, 300, rng);
  CHECK(t.Run(x).embedding == t.Run(x).embedding);
}

TEST_CASE("swap head") {
  Rng rng = SubStream(12, "t");
  TrunkConfig cfg = Config(TrunkFamily::kResNet34, {1, 16});
  cfg.num_classes = 20;
  auto t = Trunk<float>::Build(cfg, 4);
  std::map<std::string, Tensor<float>> before;
  for (const auto &p : t.params().items())
    if (p.name.rfind("head.", 0) != 0) before.emplace(p.name, p.value);
  CHECK_THROWS_AS(t.SwapHead(HeadKind::kEmbedding, HeadKind::kClassification, 4), Error);
  t.SwapHead(HeadKind::kClassification, HeadKind::kEmbedding, 4);
  std::size_t kept = 0;
  for (const auto &p : t.params().items()) {
    if (p.name.rfind("head.", 0) == 0) continue;
    CHECK(before.at(p.name) == p.value);
    ++kept;
  }
  CHECK(kept == before.size());
  auto x = RandomInput(1, 300, rng).Cast<float>();
  CHECK(t.Run(x).embedding->dim(1) == 512);
  t.SwapHead(HeadKind::kEmbedding, HeadKind::kClassification, 4);
  auto out = t.Run(x);
  REQUIRE(out.logits);
  CHECK(out.logits->dim(1) == 20);
}

TEST_CASE("pool_time is invariant to time permutation") {
  Rng rng = SubStream(13, "t");
  for (auto fam : {TrunkFamily::kResNet34, TrunkFamily::kVggM}) {
    auto t = Trunk<double>::Build(Config(fam, {1, 16}), 5);
    t.SwapHead(HeadKind::kClassification, HeadKind::kEmbedding, 5);
    for (int trial = 0; trial < 10; ++trial) {
      Tape<double> tape;
      auto f = t.ForwardFeatures(tape, tape.Constant(RandomInput(1, 300, rng)),
                                 BatchNormMode::kEval);
      const auto &v = f.value();
      const int C = v.dim(1), F = v.dim(2), T = v.dim(3);
      std::vector<int> perm(T);
      for (int i = 0; i < T; ++i) perm[i] = i;
      for (int i = T - 1; i > 0; --i)
        std::swap(perm[i], perm[UniformIndex(rng, static_cast<std::uint64_t>(i) + 1)]);
      Tensor<double> p(v.shape());
      for (int c = 0; c < C; ++c)
        for (int h = 0; h < F; ++h)
          for (int j = 0; j < T; ++j) p.at(0, c, h, j) = v.at(0, c, h, perm[j]);
      auto a = t.ForwardHead(tape, f, BatchNormMode::kEval).embedding->value();
      auto b = t.ForwardHead(tape, tape.Constant(p), BatchNormMode::kEval).embedding->value();
      double diff = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
      CHECK(diff < 1e-12);
    }
  }
}

TEST_CASE("embedding is not invariant to a frequency shift") {
  Rng rng = SubStream(14, "t");
  auto t = Trunk<double>::Build(Config(TrunkFamily::kResNet34, {1, 16}), 6);
  t.SwapHead(HeadKind::kClassification, HeadKind::kEmbedding, 6);
  auto x = RandomInput(1, 300, rng);
  Tensor<double> shifted(x.shape());
  for (int h = 0; h < 512; ++h)
    for (int j = 0; j < 300; ++j) shifted.at(0, 0, h, j) = x.at(0, 0, (h + 1) % 512, j);
  auto a = *t.Run(x).embedding, b = *t.Run(shifted).embedding;
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
  CHECK(d2 > 0.0);
}
