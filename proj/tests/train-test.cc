// tests/train-test.cc

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
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "doctest.h"
#include "fixtures.h"
#include "vexkit/errors.h"
#include "vexkit/ndgrad/checkpoint.h"
#include "vexkit/ndgrad/ops.h"
#include "vexkit/train.h"

using namespace vexkit;
using namespace vexkit::testing;

namespace {

// n_speakers x n_videos x utts_per_video, all in the dev split.
Manifest VideoManifest(int n_speakers, int n_videos, int utts_per_video) {
  std::vector<SpeakerRecord> s;
  std::vector<UtteranceRecord> u;
  for (int k = 0; k < n_speakers; ++k) {
    std::string id = "s" + std::to_string(k);
    s.push_back({id, k % 2 ? Gender::kFemale : Gender::kMale, "X", Split::kDev});
    for (int v = 0; v < n_videos; ++v)
      for (int j = 0; j < utts_per_video; ++j) {
        std::string uid = id + "/v" + std::to_string(v) + "/u" + std::to_string(j);
        u.push_back({uid, id, id + "-v" + std::to_string(v), uid + ".wav", 4.0});
      }
  }
  return Manifest::Create(s, u);
}

// Random non-negative features, 340 frames per utterance.
FeatureStore RandomFeatures(const Manifest &m, std::uint64_t seed) {
  FeatureStore f;
  Rng rng(seed);
  for (const auto &u : m.utterances()) {
    Spectrogram s;
    s.values.resize(kFreqBins, 340);
    for (Eigen::Index i = 0; i < s.values.size(); ++i)
      s.values.data()[i] = UniformUnit(rng);
    f.Add(u.utterance_id, s);
  }
  return f;
}

RunConfig TinyConfig(int num_classes) {
  RunConfig cfg;
  cfg.seed = 5;
  cfg.trunk.width = {1, 64};
  cfg.trunk.num_classes = num_classes;
  cfg.trunk.embed_dim = 8;
  cfg.optimizer.lr_initial = 0.05;
  cfg.optimizer.lr_final = 0.01;
  cfg.optimizer.epochs = 2;
  cfg.optimizer.batch_size = 4;
  cfg.pretrain.patience = 5;
  cfg.finetune.epochs = 1;
  cfg.finetune.pairs_per_epoch = 4;
  cfg.finetune.keep_fraction = 0.5;
  return cfg;
}

std::string Bytes(const ndgrad::ParamSet<float> &p) {
  return ndgrad::EncodeCheckpoint(ndgrad::ToCheckpoint(p, 0, true));
}

}  // namespace

TEST_CASE("validation split holds out one video per speaker") {
  Manifest m = VideoManifest(10, 3, 2);
  ValidationSplit s = SplitValidation(m, 3);
  CHECK(s.val.size() == 20);
  CHECK(s.train.size() == 40);
  const auto &U = m.utterances();
  std::set<std::string> train_videos, val_videos;
  std::map<std::string, std::set<std::string>> val_by_speaker;
  for (auto i : s.train) train_videos.insert(U[i].video_id);
  for (auto i : s.val) {
    val_videos.insert(U[i].video_id);
    val_by_speaker[U[i].speaker_id].insert(U[i].video_id);
  }
  for (const auto &v : val_videos) CHECK(train_videos.count(v) == 0);
  CHECK(val_by_speaker.size() == 10);
  for (const auto &[spk, vids] : val_by_speaker) CHECK(vids.size() == 1);
  CHECK(std::is_sorted(s.train.begin(), s.train.end()));
  CHECK(std::is_sorted(s.val.begin(), s.val.end()));

  ValidationSplit again = SplitValidation(m, 3);
  CHECK(again.val == s.val);
  bool differs = false;
  for (std::uint64_t seed = 4; seed < 20 && !differs; ++seed)
    differs = SplitValidation(m, seed).val != s.val;
  CHECK(differs);

  // single-video speakers stay in training
  Manifest one = VideoManifest(4, 1, 3);
  ValidationSplit t = SplitValidation(one, 1);
  CHECK(t.val.empty());
  CHECK(t.train.size() == 12);
}

TEST_CASE("pair sampling honours the positive fraction") {
  Manifest m = VideoManifest(6, 2, 3);
  std::vector<std::size_t> all(m.utterances().size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto &U = m.utterances();
  auto speaker = [&](const std::string &id) { return m.FindUtterance(id)->speaker_id; };

  Rng rng(11);
  auto pairs = SamplePairs(m, all, 1000, 0.5, rng);
  REQUIRE(pairs.size() == 1000);
  int pos = 0;
  for (const auto &p : pairs) {
    pos += p.label;
    CHECK(p.utt_a != p.utt_b);
    CHECK(p.label == (speaker(p.utt_a) == speaker(p.utt_b)));
    CHECK_FALSE(p.mined_hard);
  }
  CHECK(pos == 500);
  // shuffled: the positives are not all at the front
  int head = 0;
  for (int i = 0; i < 500; ++i) head += pairs[i].label;
  CHECK(head < 500);

  Rng r2(2);
  pos = 0;
  for (const auto &p : SamplePairs(m, all, 7, 0.3, r2)) pos += p.label;
  CHECK(pos == 2);

  // one speaker, positives only
  std::vector<std::size_t> first;
  for (std::size_t i = 0; i < U.size(); ++i)
    if (U[i].speaker_id == "s0") first.push_back(i);
  Rng r3(3);
  for (const auto &p : SamplePairs(m, first, 20, 1.0, r3)) {
    CHECK(p.label == 1);
    CHECK(speaker(p.utt_a) == "s0");
  }
  Rng r4(4);
  for (const auto &p : SamplePairs(m, all, 50, 0.0, r4)) CHECK(p.label == 0);

  // infeasible requests
  Rng r5(5);
  CHECK_THROWS_AS(SamplePairs(m, first, 4, 0.0, r5), Error);
  std::vector<std::size_t> singles;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < U.size(); ++i)
    if (seen.insert(U[i].speaker_id).second) singles.push_back(i);
  CHECK_THROWS_AS(SamplePairs(m, singles, 4, 0.5, r5), Error);
  CHECK_NOTHROW(SamplePairs(m, singles, 4, 0.0, r5));
}

TEST_CASE("hard negative mining") {
  CHECK(MinedCount(100, 0.01) == 1);
  CHECK(MinedCount(1000, 0.01) == 10);
  CHECK(MinedCount(50, 0.01) == 1);
  CHECK(MinedCount(10, 1.0) == 10);
  CHECK(MinedCount(100, 0.07) == 7);

  std::vector<PairSample> cand;
  std::vector<double> dist;
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    cand.push_back({"a" + std::to_string(i), "b" + std::to_string(i), 0, false});
    dist.push_back(1.0 + UniformUnit(rng));
  }
  dist[37] = 0.25;
  auto one = MineHardNegatives(cand, dist, 0.01);
  REQUIRE(one.size() == 1);
  CHECK(one[0].utt_a == "a37");
  CHECK(one[0].mined_hard);

  // brute force: kept pairs are the k smallest by (distance, a, b)
  auto kept = MineHardNegatives(cand, dist, 0.1);
  REQUIRE(kept.size() == 10);
  std::vector<std::size_t> order(cand.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) {
    return std::tie(dist[x], cand[x].utt_a, cand[x].utt_b) <
           std::tie(dist[y], cand[y].utt_a, cand[y].utt_b);
  });
  for (int i = 0; i < 10; ++i) CHECK(kept[i].utt_a == cand[order[i]].utt_a);

  // a larger keep fraction only adds pairs
  auto more = MineHardNegatives(cand, dist, 0.2);
  for (const auto &p : kept) CHECK(std::find(more.begin(), more.end(), p) != more.end());

  // ties resolved by identifiers
  std::vector<PairSample> tie = {{"c", "x", 0}, {"b", "z", 0}, {"b", "y", 0}};
  auto t = MineHardNegatives(tie, {1.0, 1.0, 1.0}, 0.34);
  REQUIRE(t.size() == 1);
  CHECK(t[0].utt_a == "b");
  CHECK(t[0].utt_b == "y");

  CHECK_THROWS_AS(MineHardNegatives({}, std::vector<double>{}, 0.1), Error);
  CHECK_THROWS_AS(MineHardNegatives(tie, {1.0, 2.0}, 0.1), Error);
  std::vector<PairSample> with_pos = {{"a", "b", 1}, {"c", "d", 0}};
  CHECK_THROWS_AS(MineHardNegatives(with_pos, {1.0, 2.0}, 0.5), Error);

  // embedding overload agrees with explicit distances
  std::map<std::string, Vector> emb;
  std::vector<double> ed;
  for (int i = 0; i < 100; ++i) {
    Vector a = {static_cast<float>(UniformUnit(rng)), 0.0f};
    Vector b = {0.0f, static_cast<float>(UniformUnit(rng))};
    emb[cand[i].utt_a] = a;
    emb[cand[i].utt_b] = b;
    ed.push_back(EuclideanDistance(a, b));
  }
  auto by_fn = MineHardNegatives(cand, [&](const std::string &id) { return emb.at(id); }, 0.05);
  CHECK(by_fn == MineHardNegatives(cand, ed, 0.05));
}

TEST_CASE("stage state text round trip") {
  StageState s;
  s.next_epoch = 3;
  s.best_epoch = 1;
  s.best_metric = 0.1 + 0.2;
  s.since_best = 1;
  s.log = {{TrainStage::kIdentification, 0, 2.5, 0.25, 0.1},
           {TrainStage::kIdentification, 1, 1.0 / 3.0, 0.5, 0.07},
           {TrainStage::kIdentification, 2, 0.9,
            std::numeric_limits<double>::quiet_NaN(), 1e-8}};
  std::string text = FormatStageState(s, TrainStage::kIdentification);
  StageState r = ParseStageState(text, TrainStage::kIdentification);
  CHECK(r.next_epoch == 3);
  CHECK_FALSE(r.finished);
  CHECK(r.best_metric == s.best_metric);
  REQUIRE(r.log.size() == 3);
  CHECK(r.log[1] == s.log[1]);
  CHECK(std::isnan(r.log[2].val_metric));
  CHECK(FormatStageState(r, TrainStage::kIdentification) == text);
  CHECK_THROWS_AS(ParseStageState(text, TrainStage::kContrastive), Error);
  CHECK_THROWS_AS(ParseStageState("garbage", TrainStage::kIdentification), Error);
}

TEST_CASE("feature store keeps single precision copies") {
  FeatureStore f;
  Spectrogram s;
  s.values = SpecMatrix::Constant(3, 4, 0.1);
  f.Add("u", s);
  CHECK(f.Contains("u"));
  CHECK_FALSE(f.Contains("v"));
  Spectrogram g = f.Get("u");
  CHECK(g.values.rows() == 3);
  CHECK(g.values(2, 3) == static_cast<double>(0.1f));
  CHECK_THROWS_AS(f.Get("v"), Error);
}

TEST_CASE("contrastive loss with zero margin ignores negatives") {
  using namespace ndgrad;
  Tape<double> tape;
  Tensor<double> a({3, 2}), b({3, 2});
  for (std::size_t i = 0; i < a.size(); ++i) {
    a.data()[i] = 0.1 * i;
    b.data()[i] = -0.2 * i;
  }
  Var<double> va = tape.Leaf(a), vb = tape.Leaf(b);
  std::vector<int> labels = {0, 0, 0};
  Var<double> loss = ContrastiveLoss(va, vb, std::span<const int>(labels), 0.0);
  CHECK(loss.value()[0] == 0.0);
  tape.Backward(loss);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(tape.grad(va)[i] == 0.0);
    CHECK(tape.grad(vb)[i] == 0.0);
  }
}

TEST_CASE("pretraining with zero learning rate leaves weights unchanged") {
  Manifest m = VideoManifest(3, 2, 2);
  FeatureStore f = RandomFeatures(m, 1);
  RunConfig cfg = TinyConfig(3);
  cfg.optimizer.lr_initial = 0.0;
  cfg.optimizer.lr_final = 0.0;
  cfg.optimizer.epochs = 1;
  TrainData data = MakeTrainData(m, f, cfg);
  Trunk<float> trunk = Trunk<float>::Build(cfg.trunk, cfg.seed);
  Trunk<float> before = Trunk<float>::Build(cfg.trunk, cfg.seed);
  StageState st;
  PretrainIdentification(trunk, data, cfg, st);
  CHECK(st.finished);
  REQUIRE(st.log.size() == 1);
  CHECK(std::isfinite(st.log[0].loss));
  for (const auto &p : trunk.params().items()) {
    if (!p.trainable) continue;
    const auto &q = before.params().Get(p.name);
    CHECK_MESSAGE(std::equal(p.value.data(), p.value.data() + p.value.size(), q.value.data()),
                  p.name);
  }
}

TEST_CASE("single class identification has zero loss") {
  Manifest m = VideoManifest(1, 2, 4);
  FeatureStore f = RandomFeatures(m, 2);
  RunConfig cfg = TinyConfig(1);
  cfg.optimizer.epochs = 1;
  TrainData data = MakeTrainData(m, f, cfg);
  Trunk<float> trunk = Trunk<float>::Build(cfg.trunk, cfg.seed);
  StageState st;
  PretrainIdentification(trunk, data, cfg, st);
  REQUIRE(st.log.size() == 1);
  CHECK(std::abs(st.log[0].loss) < 1e-6);
  CHECK(st.log[0].val_metric == 1.0);
}

TEST_CASE("pretraining is deterministic and resumable") {
  Manifest m = VideoManifest(3, 2, 3);
  FeatureStore f = RandomFeatures(m, 3);
  RunConfig cfg = TinyConfig(3);
  TrainData data = MakeTrainData(m, f, cfg);

  Trunk<float> a = Trunk<float>::Build(cfg.trunk, cfg.seed);
  StageState sa;
  std::string after_first;
  PretrainIdentification(a, data, cfg, sa, [&](const StageState &s, const Trunk<float> &t, bool) {
    if (s.next_epoch == 1) after_first = Bytes(t.params());
  });
  CHECK(sa.log.size() == 2);

  // second run halts after one epoch, then resumes in a fresh trunk
  Trunk<float> b = Trunk<float>::Build(cfg.trunk, cfg.seed);
  StageState sb;
  ndgrad::Checkpoint saved;
  struct Halt {};
  CHECK_THROWS_AS(
      PretrainIdentification(b, data, cfg, sb, [&](const StageState &s, const Trunk<float> &t, bool) {
        saved = ndgrad::ToCheckpoint(t.params(), t.config().Fingerprint(), true);
        if (s.next_epoch == 1) throw Halt{};
      }),
      Halt);
  CHECK(Bytes(b.params()) == after_first);
  CHECK(sb.next_epoch == 1);
  StageState resumed = ParseStageState(FormatStageState(sb, TrainStage::kIdentification),
                                       TrainStage::kIdentification);
  Trunk<float> c = Trunk<float>::Build(cfg.trunk, 999);
  ndgrad::RestoreCheckpoint(saved, c.params(), cfg.trunk.Fingerprint());
  PretrainIdentification(c, data, cfg, resumed);
  CHECK(Bytes(c.params()) == Bytes(a.params()));
  CHECK(resumed.log == sa.log);
  CHECK(resumed.best_epoch == sa.best_epoch);
}

TEST_CASE("finetuning") {
  Manifest m = VideoManifest(4, 2, 3);
  FeatureStore f = RandomFeatures(m, 4);
  RunConfig cfg = TinyConfig(4);
  TrainData data = MakeTrainData(m, f, cfg);
  CHECK_FALSE(data.val_trials.pairs.empty());
  Trunk<float> trunk = Trunk<float>::Build(cfg.trunk, cfg.seed);
  StageState pre;
  CHECK_THROWS_AS(FinetuneContrastive(trunk, data, cfg, pre), Error);
  trunk.SwapHead(HeadKind::kClassification, HeadKind::kEmbedding, 1);

  SUBCASE("zero epochs is a no-op") {
    cfg.finetune.epochs = 0;
    std::string before = Bytes(trunk.params());
    StageState st;
    FinetuneContrastive(trunk, data, cfg, st);
    CHECK(st.finished);
    CHECK(st.log.empty());
    CHECK(Bytes(trunk.params()) == before);
  }
  SUBCASE("one epoch reports a finite loss and an EER") {
    StageState st;
    int calls = 0;
    FinetuneContrastive(trunk, data, cfg, st, [&](const StageState &, const Trunk<float> &, bool) {
      ++calls;
    });
    CHECK(calls == 1);
    REQUIRE(st.log.size() == 1);
    CHECK(std::isfinite(st.log[0].loss));
    CHECK(st.log[0].val_metric >= 0.0);
    CHECK(st.log[0].val_metric <= 1.0);
    CHECK(st.log[0].lr == doctest::Approx(0.1 * cfg.optimizer.lr_initial));
  }
}
