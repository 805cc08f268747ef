// src/train.cc

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

#include "vexkit/train.h"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <sstream>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <tuple>
#include <unordered_map>

#include "vexkit/errors.h"
#include "vexkit/metrics.h"
#include "vexkit/ndgrad/ops.h"
#include "vexkit/ndgrad/sgd.h"

namespace vexkit {

using ndgrad::BatchNormMode;
using ndgrad::Tape;
using ndgrad::Tensor;
using ndgrad::Var;

namespace {

template <typename V>
void Shuffle(std::vector<V> &v, Rng &rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[UniformIndex(rng, i)]);
}

void CheckFinite(double loss, std::string_view stage, int epoch) {
  if (!std::isfinite(loss))
    Fail(ErrorKind::kNumerical, std::string(stage) + ": non-finite loss in epoch " +
                                    std::to_string(epoch));
}

// Shared epoch loop: training, validation, bookkeeping, hook.
void RunStage(TrainStage stage, Trunk<float> &trunk, int epochs, int patience,
              bool higher_is_better, StageState &state, const EpochHook &hook,
              const std::function<std::pair<double, double>(int)> &train_epoch,
              const std::function<double()> &validate) {
  if (state.next_epoch >= epochs) state.finished = true;
  while (!state.finished) {
    const int e = state.next_epoch;
    const auto [loss, lr] = train_epoch(e);
    const double metric = validate();
    bool improved;
    if (std::isnan(metric) || state.best_epoch < 0) {
      improved = true;
    } else {
      improved = higher_is_better ? metric > state.best_metric
                                  : metric < state.best_metric;
    }
    if (improved) {
      state.best_epoch = e;
      state.best_metric = metric;
      state.since_best = 0;
    } else {
      ++state.since_best;
    }
    state.log.push_back({stage, e, loss, metric, lr});
    state.next_epoch = e + 1;
    if (state.next_epoch >= epochs || state.since_best >= patience)
      state.finished = true;
    if (hook) hook(state, trunk, improved);
  }
}

Tensor<float> CropBatch(const std::vector<Spectrogram> &crops) {
  std::vector<const Spectrogram *> ptrs;
  ptrs.reserve(crops.size());
  for (const auto &c : crops) ptrs.push_back(&c);
  return MakeInputBatch<float>(ptrs);
}

// Embeddings of whole utterances, computed once each.
class EmbeddingCache {
 public:
  EmbeddingCache(Trunk<float> &trunk, const FeatureStore &f)
      : trunk_(trunk), features_(f) {}
  const Vector &Get(const std::string &id) {
    auto it = cache_.find(id);
    if (it == cache_.end())
      it = cache_.emplace(id, EmbedFull(trunk_, Normalize(features_.Get(id)))).first;
    return it->second;
  }

 private:
  Trunk<float> &trunk_;
  const FeatureStore &features_;
  std::unordered_map<std::string, Vector> cache_;
};

}  // namespace

ValidationSplit SplitValidation(const Manifest &m, std::uint64_t seed) {
  if (m.utterances().empty())
    Fail(ErrorKind::kData, "split_validation: manifest has no utterances");
  Rng rng = SubStream(seed, "split.validation");
  std::set<std::string> held_out;  // video ids
  for (const std::string &spk : m.SpeakerIds()) {
    std::set<std::string> videos;
    for (std::size_t i : m.UtterancesOf(spk)) videos.insert(m.utterances()[i].video_id);
    if (videos.size() < 2) continue;
    auto it = videos.begin();
    std::advance(it, UniformIndex(rng, videos.size()));
    held_out.insert(spk + '\n' + *it);
  }
  ValidationSplit s;
  for (std::size_t i = 0; i < m.utterances().size(); ++i) {
    const UtteranceRecord &u = m.utterances()[i];
    (held_out.count(u.speaker_id + '\n' + u.video_id) ? s.val : s.train).push_back(i);
  }
  return s;
}

std::vector<PairSample> SamplePairs(const Manifest &m,
                                    const std::vector<std::size_t> &utterances,
                                    std::size_t n_pairs, double pos_fraction,
                                    Rng &rng) {
  if (!(pos_fraction >= 0.0 && pos_fraction <= 1.0))
    Fail(ErrorKind::kInvalidArgument, "sample_pairs: pos_fraction must be in [0, 1]");
  std::map<std::string, std::vector<std::size_t>> by_speaker;
  for (std::size_t i : utterances) {
    if (i >= m.utterances().size())
      Fail(ErrorKind::kInvalidArgument, "sample_pairs: utterance index out of range");
    by_speaker[m.utterances()[i].speaker_id].push_back(i);
  }
  std::vector<const std::vector<std::size_t> *> speakers, multi;
  for (const auto &[spk, utts] : by_speaker) {
    speakers.push_back(&utts);
    if (utts.size() >= 2) multi.push_back(&utts);
  }
  const std::size_t n_pos =
      static_cast<std::size_t>(std::floor(n_pairs * pos_fraction + 1e-9));
  const std::size_t n_neg = n_pairs - n_pos;
  if (n_pos > 0 && multi.empty())
    Fail(ErrorKind::kData, "sample_pairs: positives requested but no speaker has two utterances");
  if (n_neg > 0 && speakers.size() < 2)
    Fail(ErrorKind::kData, "sample_pairs: negatives requested but fewer than two speakers");
  const auto &U = m.utterances();
  std::vector<PairSample> out;
  out.reserve(n_pairs);
  for (std::size_t k = 0; k < n_pos; ++k) {
    const auto &utts = *multi[UniformIndex(rng, multi.size())];
    const std::size_t a = UniformIndex(rng, utts.size());
    std::size_t b = UniformIndex(rng, utts.size() - 1);
    if (b >= a) ++b;
    out.push_back({U[utts[a]].utterance_id, U[utts[b]].utterance_id, 1, false});
  }
  for (std::size_t k = 0; k < n_neg; ++k) {
    const std::size_t sa = UniformIndex(rng, speakers.size());
    std::size_t sb = UniformIndex(rng, speakers.size() - 1);
    if (sb >= sa) ++sb;
    const auto &ua = *speakers[sa], &ub = *speakers[sb];
    out.push_back({U[ua[UniformIndex(rng, ua.size())]].utterance_id,
                   U[ub[UniformIndex(rng, ub.size())]].utterance_id, 0, false});
  }
  Shuffle(out, rng);
  return out;
}

std::size_t MinedCount(std::size_t n_candidates, double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    Fail(ErrorKind::kInvalidArgument, "mining: keep_fraction must be in (0, 1]");
  const auto k = static_cast<std::size_t>(std::floor(n_candidates * keep_fraction + 1e-9));
  return std::clamp<std::size_t>(k, 1, n_candidates);
}

std::vector<PairSample> MineHardNegatives(
    const std::vector<PairSample> &candidates,
    const std::vector<double> &distances, double keep_fraction) {
  if (candidates.empty()) Fail(ErrorKind::kInvalidArgument, "mining: no candidates");
  if (distances.size() != candidates.size())
    Fail(ErrorKind::kInvalidArgument, "mining: one distance per candidate required");
  for (const PairSample &p : candidates)
    if (p.label != 0)
      Fail(ErrorKind::kInvalidArgument,
           "mining: positive candidate " + p.utt_a + " " + p.utt_b);
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto key = [&](std::size_t i) {
    return std::tie(distances[i], candidates[i].utt_a, candidates[i].utt_b);
  };
  const std::size_t keep = MinedCount(candidates.size(), keep_fraction);
  std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                    [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  std::vector<PairSample> out;
  out.reserve(keep);
  for (std::size_t k = 0; k < keep; ++k) {
    out.push_back(candidates[order[k]]);
    out.back().mined_hard = true;
  }
  return out;
}

std::vector<PairSample> MineHardNegatives(
    const std::vector<PairSample> &candidates, const EmbeddingFn &embed,
    double keep_fraction) {
  std::unordered_map<std::string, Vector> cache;
  auto get = [&](const std::string &id) -> const Vector & {
    auto it = cache.find(id);
    if (it == cache.end()) it = cache.emplace(id, embed(id)).first;
    return it->second;
  };
  std::vector<double> d;
  d.reserve(candidates.size());
  for (const PairSample &p : candidates)
    d.push_back(EuclideanDistance(get(p.utt_a), get(p.utt_b)));
  return MineHardNegatives(candidates, d, keep_fraction);
}

void FeatureStore::Add(const std::string &id, const Spectrogram &s) {
  Item it;
  it.rows = s.freq_bins();
  it.cols = s.frames();
  it.values.resize(static_cast<std::size_t>(s.values.size()));
  for (Eigen::Index i = 0; i < s.values.size(); ++i)
    it.values[i] = static_cast<float>(s.values.data()[i]);
  items_[id] = std::move(it);
}

bool FeatureStore::Contains(const std::string &id) const {
  return items_.count(id) > 0;
}

Spectrogram FeatureStore::Get(const std::string &id) const {
  auto it = items_.find(id);
  if (it == items_.end()) Fail(ErrorKind::kData, "no features for utterance " + id);
  Spectrogram s;
  s.values.resize(it->second.rows, it->second.cols);
  for (Eigen::Index i = 0; i < s.values.size(); ++i)
    s.values.data()[i] = it->second.values[i];
  return s;
}

std::string_view TrainStageName(TrainStage s) {
  return s == TrainStage::kIdentification ? "identification" : "contrastive";
}

std::string FormatEpochLog(const EpochLog &e) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d\t%s\t%.6f\t%.6f\t%.6g", e.epoch,
                std::string(TrainStageName(e.stage)).c_str(), e.loss,
                e.val_metric, e.lr);
  return buf;
}

namespace {

std::string Hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

constexpr std::string_view kStateHeader = "vexkit-train-state v1";

}  // namespace

std::string FormatStageState(const StageState &s, TrainStage stage) {
  std::string o(kStateHeader);
  o += "\nstage " + std::string(TrainStageName(stage)) +
       "\nnext_epoch " + std::to_string(s.next_epoch) +
       "\nfinished " + std::to_string(s.finished ? 1 : 0) +
       "\nbest_epoch " + std::to_string(s.best_epoch) +
       "\nbest_metric " + Hex(s.best_metric) +
       "\nsince_best " + std::to_string(s.since_best) + '\n';
  for (const EpochLog &e : s.log)
    o += "epoch " + std::to_string(e.epoch) + ' ' + Hex(e.loss) + ' ' +
         Hex(e.val_metric) + ' ' + Hex(e.lr) + '\n';
  return o;
}

StageState ParseStageState(std::string_view text, TrainStage stage) {
  std::istringstream in{std::string(text)};
  auto bad = [](const std::string &m) { Fail(ErrorKind::kData, "train state: " + m); };
  std::string line;
  if (!std::getline(in, line) || line != kStateHeader) bad("missing header");
  StageState s;
  auto field = [&](const char *name) {
    std::string key, value;
    if (!std::getline(in, line)) bad(std::string("missing ") + name);
    std::istringstream ls(line);
    ls >> key >> value;
    if (key != name) bad(std::string("expected ") + name + ", got '" + key + "'");
    return value;
  };
  auto real = [&](const std::string &v) {
    char *end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0') bad("bad number '" + v + "'");
    return d;
  };
  auto integer = [&](const std::string &v) {
    int out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) bad("bad integer '" + v + "'");
    return out;
  };
  if (field("stage") != TrainStageName(stage)) bad("stage mismatch");
  s.next_epoch = integer(field("next_epoch"));
  s.finished = integer(field("finished")) != 0;
  s.best_epoch = integer(field("best_epoch"));
  s.best_metric = real(field("best_metric"));
  s.since_best = integer(field("since_best"));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key, epoch, loss, metric, lr;
    ls >> key >> epoch >> loss >> metric >> lr;
    if (key != "epoch" || lr.empty()) bad("bad epoch line '" + line + "'");
    s.log.push_back({stage, integer(epoch), real(loss), real(metric), real(lr)});
  }
  if (static_cast<int>(s.log.size()) != s.next_epoch) bad("epoch log is incomplete");
  return s;
}

TrainData MakeTrainData(const Manifest &m, const FeatureStore &f,
                        const RunConfig &cfg) {
  TrainData d;
  d.manifest = &m;
  d.features = &f;
  d.split = SplitValidation(m, cfg.seed);
  if (d.split.train.empty()) Fail(ErrorKind::kData, "training set is empty");
  int label = 0;
  for (const std::string &spk : m.SpeakerIds())
    if (!m.UtterancesOf(spk).empty()) d.class_of[spk] = label++;
  // Every pair of held-out utterances: exhaustive, so always feasible.
  d.val_trials.name = "validation";
  const auto &U = m.utterances();
  for (std::size_t a = 0; a < d.split.val.size(); ++a)
    for (std::size_t b = a + 1; b < d.split.val.size(); ++b) {
      const UtteranceRecord &ua = U[d.split.val[a]], &ub = U[d.split.val[b]];
      d.val_trials.pairs.push_back(
          {ua.speaker_id == ub.speaker_id, ua.utterance_id, ub.utterance_id});
    }
  bool has_target = false, has_nontarget = false;
  for (const Trial &t : d.val_trials.pairs) (t.target ? has_target : has_nontarget) = true;
  if (!has_target || !has_nontarget) d.val_trials.pairs.clear();
  for (const auto &u : m.utterances())
    if (!f.Contains(u.utterance_id))
      Fail(ErrorKind::kData, "no features for utterance " + u.utterance_id);
  return d;
}

double IdentificationAccuracy(Trunk<float> &trunk, const TrainData &data,
                              const std::vector<std::size_t> &utterances) {
  if (utterances.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t correct = 0;
  for (std::size_t i : utterances) {
    const UtteranceRecord &u = data.manifest->utterances()[i];
    const Spectrogram s = Normalize(data.features->Get(u.utterance_id));
    const auto out = trunk.Run(MakeInputBatch<float>({&s}));
    if (!out.logits) Fail(ErrorKind::kInvalidArgument, "trunk has no classification head");
    const float *z = out.logits->data();
    const int C = static_cast<int>(out.logits->size());
    const int best = static_cast<int>(std::max_element(z, z + C) - z);
    if (best == data.class_of.at(u.speaker_id)) ++correct;
  }
  return static_cast<double>(correct) / utterances.size();
}

double VerificationEer(Trunk<float> &trunk, const FeatureStore &features,
                       const TrialList &trials) {
  if (trials.pairs.empty()) return std::numeric_limits<double>::quiet_NaN();
  EmbeddingCache cache(trunk, features);
  ScoreSet s;
  for (const Trial &t : trials.pairs)
    s.push_back({EuclideanDistance(cache.Get(t.utt_a), cache.Get(t.utt_b)), t.target});
  return Eer(s);
}

void PretrainIdentification(Trunk<float> &trunk, const TrainData &data,
                            const RunConfig &cfg, StageState &state,
                            const EpochHook &hook) {
  if (trunk.head() != HeadKind::kClassification)
    Fail(ErrorKind::kInvalidArgument, "pretrain: trunk must carry the classification head");
  if (static_cast<int>(data.class_of.size()) > trunk.config().num_classes)
    Fail(ErrorKind::kConfig, "pretrain: " + std::to_string(data.class_of.size()) +
                                 " speakers exceed trunk.num_classes");
  const ndgrad::SgdConfig &opt = cfg.optimizer;
  const auto &U = data.manifest->utterances();

  auto train_epoch = [&](int epoch) -> std::pair<double, double> {
    std::vector<std::size_t> items;
    for (std::size_t i : data.split.train)
      for (int c = 0; c < cfg.pretrain.crops_per_utterance; ++c) items.push_back(i);
    Rng order = SubStream(cfg.seed, "pretrain.order", epoch);
    Shuffle(items, order);
    Rng crop_rng = SubStream(cfg.seed, "pretrain.crops", epoch);
    double loss_sum = 0.0;
    int batches = 0;
    const std::size_t B = static_cast<std::size_t>(opt.batch_size);
    for (std::size_t start = 0; start < items.size(); start += B) {
      const std::size_t end = std::min(items.size(), start + B);
      if (end - start < 2) break;  // batch statistics need two samples
      std::vector<Spectrogram> crops;
      std::vector<int> labels;
      for (std::size_t k = start; k < end; ++k) {
        const UtteranceRecord &u = U[items[k]];
        crops.push_back(Normalize(RandomCrop(data.features->Get(u.utterance_id), crop_rng)));
        labels.push_back(data.class_of.at(u.speaker_id));
      }
      Tape<float> tape;
      Var<float> x = tape.Constant(CropBatch(crops));
      TrunkVars<float> v = trunk.Forward(tape, x, BatchNormMode::kTrain);
      Var<float> loss = ndgrad::SoftmaxCrossEntropy(*v.logits, std::span<const int>(labels));
      const double l = loss.value()[0];
      CheckFinite(l, "pretrain", epoch);
      tape.Backward(loss);
      ndgrad::SgdStep(trunk.params(), opt, epoch);
      trunk.params().ZeroGrad();
      loss_sum += l;
      ++batches;
    }
    return {batches ? loss_sum / batches : 0.0, ndgrad::LearningRate(opt, epoch)};
  };
  auto validate = [&] { return IdentificationAccuracy(trunk, data, data.split.val); };
  RunStage(TrainStage::kIdentification, trunk, opt.epochs, cfg.pretrain.patience,
           true, state, hook, train_epoch, validate);
}

void FinetuneContrastive(Trunk<float> &trunk, const TrainData &data,
                         const RunConfig &cfg, StageState &state,
                         const EpochHook &hook) {
  if (trunk.head() != HeadKind::kEmbedding)
    Fail(ErrorKind::kInvalidArgument, "finetune: trunk must carry the embedding head");
  const FinetuneOptions &ft = cfg.finetune;
  ndgrad::SgdConfig opt = cfg.optimizer;
  opt.epochs = std::max(1, ft.epochs);
  const std::size_t n_hard = static_cast<std::size_t>(
      std::floor(ft.pairs_per_epoch * ft.hard_mix + 1e-9));
  const std::size_t n_random = ft.pairs_per_epoch - n_hard;
  const Manifest &m = *data.manifest;

  auto mine = [&](int epoch) {
    std::vector<PairSample> mined;
    if (n_hard == 0) return mined;
    const std::size_t pool =
        static_cast<std::size_t>(std::ceil(n_hard / ft.keep_fraction - 1e-9));
    // Fresh candidate pool of distinct negative pairs.
    Rng rng = SubStream(cfg.seed, "finetune.candidates", epoch);
    std::vector<PairSample> cand;
    std::set<std::pair<std::string, std::string>> seen;
    for (int attempt = 0; cand.size() < pool && attempt < 100; ++attempt) {
      for (PairSample &p : SamplePairs(m, data.split.train, pool - cand.size(), 0.0, rng)) {
        auto key = std::minmax(p.utt_a, p.utt_b);
        if (seen.emplace(key.first, key.second).second) cand.push_back(std::move(p));
      }
    }
    EmbeddingCache cache(trunk, *data.features);
    std::vector<double> d;
    for (const PairSample &p : cand)
      d.push_back(EuclideanDistance(cache.Get(p.utt_a), cache.Get(p.utt_b)));
    mined = MineHardNegatives(cand, d, ft.keep_fraction);
    if (mined.size() > n_hard) mined.resize(n_hard);
    return mined;
  };

  auto train_epoch = [&](int epoch) -> std::pair<double, double> {
    std::vector<PairSample> hard = mine(epoch);
    Rng pair_rng = SubStream(cfg.seed, "finetune.pairs", epoch);
    std::vector<PairSample> random =
        SamplePairs(m, data.split.train, n_random, ft.pos_fraction, pair_rng);
    Rng order = SubStream(cfg.seed, "finetune.order", epoch);
    Shuffle(hard, order);
    Shuffle(random, order);
    // Interleave at the hard_mix rate so every batch carries its share.
    std::vector<PairSample> pairs;
    const std::size_t total = hard.size() + random.size();
    for (std::size_t i = 0, h = 0, r = 0; i < total; ++i) {
      const bool take_hard = h < hard.size() &&
          (r == random.size() || (i + 1) * hard.size() / total > h);
      pairs.push_back(std::move(take_hard ? hard[h++] : random[r++]));
    }
    Rng crop_rng = SubStream(cfg.seed, "finetune.crops", epoch);
    const std::size_t P = std::max(1, cfg.optimizer.batch_size / 2);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < pairs.size(); start += P) {
      const std::size_t end = std::min(pairs.size(), start + P);
      const int n = static_cast<int>(end - start);
      std::vector<Spectrogram> crops(2 * n);
      std::vector<int> labels, rows_a, rows_b;
      for (int k = 0; k < n; ++k) {
        const PairSample &p = pairs[start + k];
        crops[k] = Normalize(RandomCrop(data.features->Get(p.utt_a), crop_rng));
        crops[n + k] = Normalize(RandomCrop(data.features->Get(p.utt_b), crop_rng));
        labels.push_back(p.label);
        rows_a.push_back(k);
        rows_b.push_back(n + k);
      }
      Tape<float> tape;
      Var<float> x = tape.Constant(CropBatch(crops));
      TrunkVars<float> v = trunk.Forward(tape, x, BatchNormMode::kTrain);
      Var<float> ea = ndgrad::GatherRows(*v.embedding, std::span<const int>(rows_a));
      Var<float> eb = ndgrad::GatherRows(*v.embedding, std::span<const int>(rows_b));
      Var<float> loss =
          ndgrad::ContrastiveLoss(ea, eb, std::span<const int>(labels), ft.margin);
      const double l = loss.value()[0];
      CheckFinite(l, "finetune", epoch);
      tape.Backward(loss);
      ndgrad::SgdStep(trunk.params(), opt, epoch, ft.lr_scale);
      trunk.params().ZeroGrad();
      loss_sum += l;
      ++batches;
    }
    return {batches ? loss_sum / batches : 0.0,
            ft.lr_scale * ndgrad::LearningRate(opt, epoch)};
  };
  auto validate = [&] { return VerificationEer(trunk, *data.features, data.val_trials); };
  RunStage(TrainStage::kContrastive, trunk, ft.epochs, ft.patience, false, state,
           hook, train_epoch, validate);
}

}  // namespace vexkit
