// src/pipeline.cc

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

#include "vexkit/pipeline.h"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "vexkit/errors.h"
#include "vexkit/metrics.h"
#include "vexkit/ndgrad/checkpoint.h"
#include "vexkit/trials.h"
#include "vexkit/wav.h"

namespace vexkit {

namespace fs = std::filesystem;

namespace {

struct Halted {};

constexpr PipelineStage kAllStages[] = {
    PipelineStage::kPreprocess, PipelineStage::kPretrain, PipelineStage::kFinetune,
    PipelineStage::kEmbed,      PipelineStage::kScore,    PipelineStage::kEvaluate};

void WriteFileAtomic(const std::string &path, const std::string &content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) Fail(ErrorKind::kIo, "cannot write '" + tmp + "'");
    out << content;
    if (!out) Fail(ErrorKind::kIo, "write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    Fail(ErrorKind::kIo, "cannot rename '" + tmp + "' to '" + path + "'");
}

std::string ReadFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void MakeDirs(const fs::path &p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) Fail(ErrorKind::kIo, "cannot create " + p.string() + ": " + ec.message());
}

std::string EpochName(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "epoch-%03d.ckpt", epoch);
  return buf;
}

const char *ProtocolTitle(int p) {
  switch (p) {
    case 1:
      return "protocol 1 (whole utterance)";
    case 2:
      return "protocol 2 (mean of ten crops)";
    default:
      return "protocol 3 (mean of crop-pair distances)";
  }
}

}  // namespace

std::string_view PipelineStageName(PipelineStage s) {
  switch (s) {
    case PipelineStage::kPreprocess:
      return "preprocess";
    case PipelineStage::kPretrain:
      return "pretrain";
    case PipelineStage::kFinetune:
      return "finetune";
    case PipelineStage::kEmbed:
      return "embed";
    case PipelineStage::kScore:
      return "score";
    case PipelineStage::kEvaluate:
      return "evaluate";
  }
  return "?";
}

std::optional<PipelineStage> ParsePipelineStage(std::string_view s) {
  for (PipelineStage st : kAllStages)
    if (PipelineStageName(st) == s) return st;
  return std::nullopt;
}

std::optional<HaltPoint> ParseHaltPoint(std::string_view s) {
  const std::size_t colon = s.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  auto stage = ParsePipelineStage(s.substr(0, colon));
  if (!stage || (*stage != PipelineStage::kPretrain && *stage != PipelineStage::kFinetune))
    return std::nullopt;
  const std::string_view num = s.substr(colon + 1);
  int epoch = -1;
  auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), epoch);
  if (ec != std::errc() || p != num.data() + num.size() || epoch < 0) return std::nullopt;
  return HaltPoint{*stage, epoch};
}

std::string ResolveAudioPath(const std::string &manifest_path,
                             const std::string &audio_path) {
  const fs::path a(audio_path);
  if (a.is_absolute()) return audio_path;
  return (fs::path(manifest_path).parent_path() / a).string();
}

std::string SpectrogramCachePath(const std::string &dir,
                                 const std::string &utterance_id) {
  const fs::path rel(utterance_id);
  if (utterance_id.empty() || rel.is_absolute())
    Fail(ErrorKind::kData, "unusable utterance id '" + utterance_id + "'");
  for (const auto &part : rel)
    if (part == ".." || part == ".")
      Fail(ErrorKind::kData, "unusable utterance id '" + utterance_id + "'");
  return (fs::path(dir) / (utterance_id + ".spec")).string();
}

std::string EvaluateScores(const std::vector<ScoreLine> &scores,
                           const std::string &title) {
  return FormatReport(Evaluate(ToScoreSet(scores)), title);
}

RunConfig ToyRunConfig(const std::string &manifest_path, const std::string &workdir,
                       std::uint64_t seed) {
  RunConfig c;
  c.seed = seed;
  c.manifest_path = manifest_path;
  c.workdir = workdir;
  c.trunk.family = TrunkFamily::kResNet34;
  c.trunk.width = {1, 16};
  c.trunk.num_classes = 0;
  c.optimizer.lr_initial = 0.2;
  c.optimizer.lr_final = 0.02;
  c.optimizer.epochs = 20;
  c.optimizer.batch_size = 16;
  c.pretrain.patience = 6;
  c.finetune.epochs = 4;
  return c;
}

Pipeline::Pipeline(RunConfig cfg, PipelineOptions opt)
    : cfg_(std::move(cfg)), opt_(std::move(opt)) {}

std::string Pipeline::Path(const std::string &relative) const {
  return (fs::path(cfg_.workdir) / relative).string();
}

bool Pipeline::Done(PipelineStage s) const {
  return fs::exists(Path(std::string(PipelineStageName(s)) + ".done"));
}

void Pipeline::MarkDone(PipelineStage s) {
  WriteFileAtomic(Path(std::string(PipelineStageName(s)) + ".done"), "done\n");
  Progress(std::string(PipelineStageName(s)) + ": done");
}

void Pipeline::Progress(const std::string &line) const {
  if (opt_.progress) opt_.progress(line);
}

TrunkConfig Pipeline::ResolvedTrunk() const {
  TrunkConfig t = cfg_.trunk;
  if (t.num_classes == 0) {
    int n = 0;
    for (const std::string &spk : manifest_.SpeakerIds())
      if (!manifest_.UtterancesOf(spk).empty()) ++n;
    t.num_classes = n;
  }
  t.Validate();
  return t;
}

void Pipeline::Prepare() {
  if (prepared_) return;
  cfg_.Validate();
  if (!fs::exists(cfg_.manifest_path))
    Fail(ErrorKind::kConfig, "manifest '" + cfg_.manifest_path + "' does not exist");
  manifest_ = LoadManifest(cfg_.manifest_path);
  MakeDirs(cfg_.workdir);
  const std::string snapshot = FormatRunConfig(cfg_);
  const std::string path = Path("config.txt");
  if (fs::exists(path)) {
    if (ReadFile(path) != snapshot)
      Fail(ErrorKind::kConfig, "work directory " + cfg_.workdir +
                                   " was created with a different configuration");
  } else {
    WriteFileAtomic(path, snapshot);
  }
  prepared_ = true;
}

bool Pipeline::RunThrough(PipelineStage last) {
  Prepare();
  try {
    for (PipelineStage s : kAllStages) {
      if (!Done(s)) {
        Progress(std::string(PipelineStageName(s)) + ": start");
        try {
          switch (s) {
            case PipelineStage::kPreprocess: Preprocess(); break;
            case PipelineStage::kPretrain: Pretrain(); break;
            case PipelineStage::kFinetune: Finetune(); break;
            case PipelineStage::kEmbed: Embed(); break;
            case PipelineStage::kScore: Score(); break;
            case PipelineStage::kEvaluate: Evaluate(); break;
          }
        } catch (const Error &e) {
          throw Error(e.kind(), std::string(PipelineStageName(s)) + ": " + e.what());
        }
        MarkDone(s);
      }
      if (s == last) break;
    }
  } catch (const Halted &) {
    return false;
  }
  return true;
}

void Pipeline::Preprocess() {
  const std::string dir = Path("spec");
  for (const UtteranceRecord &u : manifest_.utterances()) {
    const std::string out = SpectrogramCachePath(dir, u.utterance_id);
    if (fs::exists(out)) continue;  // resumable
    MakeDirs(fs::path(out).parent_path());
    const Waveform w = ReadWav(ResolveAudioPath(cfg_.manifest_path, u.audio_path));
    WriteSpectrogramCache(ComputeSpectrogram(w), out);
  }
}

void Pipeline::LoadData() {
  if (data_) return;
  const std::string dir = Path("spec");
  for (const UtteranceRecord &u : manifest_.utterances())
    features_.Add(u.utterance_id,
                  ReadSpectrogramCache(SpectrogramCachePath(dir, u.utterance_id)));
  RunConfig c = cfg_;
  c.trunk = ResolvedTrunk();
  data_ = MakeTrainData(manifest_, features_, c);
}

namespace {

// Persists a training stage after every epoch and honours the halt point.
EpochHook StageHook(const std::string &dir, TrainStage stage, std::uint64_t fp,
                    PipelineStage pstage, const std::optional<HaltPoint> &halt,
                    const std::function<void()> &after_state,
                    const std::function<void(const std::string &)> &progress) {
  return [=](const StageState &st, const Trunk<float> &trunk, bool improved) {
    const int epoch = st.log.back().epoch;
    ndgrad::WriteCheckpoint((fs::path(dir) / EpochName(epoch)).string(),
                            ndgrad::ToCheckpoint(trunk.params(), fp, true));
    if (improved)
      ndgrad::WriteCheckpoint((fs::path(dir) / "best.ckpt").string(),
                              ndgrad::ToCheckpoint(trunk.params(), fp, false));
    WriteFileAtomic((fs::path(dir) / "state.txt").string(), FormatStageState(st, stage));
    after_state();
    if (progress)
      progress(std::string(PipelineStageName(pstage)) + ": " +
               FormatEpochLog(st.log.back()) + (improved ? " best" : ""));
    if (halt && halt->stage == pstage && halt->epoch == epoch) {
      if (progress)
        progress("halted after " + std::string(PipelineStageName(pstage)) +
                 " epoch " + std::to_string(epoch));
      throw Halted{};
    }
  };
}

StageState LoadStageState(const std::string &dir, TrainStage stage) {
  const fs::path p = fs::path(dir) / "state.txt";
  if (!fs::exists(p)) return {};
  return ParseStageState(ReadFile(p.string()), stage);
}

}  // namespace

void Pipeline::WriteMetricsLog() {
  std::string out = "# epoch\tstage\tloss\tval_metric\tlr\n";
  const StageState pre = LoadStageState(Path("pretrain"), TrainStage::kIdentification);
  const StageState ft = LoadStageState(Path("finetune"), TrainStage::kContrastive);
  for (const StageState *s : {&pre, &ft})
    for (const EpochLog &e : s->log) out += FormatEpochLog(e) + '\n';
  WriteFileAtomic(Path("metrics.log"), out);
}

void Pipeline::Pretrain() {
  LoadData();
  const TrunkConfig tc = ResolvedTrunk();
  const std::uint64_t fp = tc.Fingerprint();
  const std::string dir = Path("pretrain");
  MakeDirs(dir);
  StageState st = LoadStageState(dir, TrainStage::kIdentification);
  Trunk<float> trunk = Trunk<float>::Build(tc, cfg_.seed);
  if (st.next_epoch > 0) {
    ndgrad::RestoreCheckpoint(
        ndgrad::ReadCheckpoint((fs::path(dir) / EpochName(st.next_epoch - 1)).string()),
        trunk.params(), fp);
    Progress("pretrain: resuming at epoch " + std::to_string(st.next_epoch));
  }
  RunConfig c = cfg_;
  c.trunk = tc;
  PretrainIdentification(
      trunk, *data_, c, st,
      StageHook(dir, TrainStage::kIdentification, fp, PipelineStage::kPretrain,
                opt_.halt_after, [this] { WriteMetricsLog(); }, opt_.progress));
}

void Pipeline::Finetune() {
  LoadData();
  const TrunkConfig tc = ResolvedTrunk();
  const std::uint64_t fp = tc.Fingerprint();
  const std::string dir = Path("finetune");
  MakeDirs(dir);
  StageState st = LoadStageState(dir, TrainStage::kContrastive);
  Trunk<float> trunk = Trunk<float>::Build(tc, cfg_.seed);
  ndgrad::RestoreCheckpoint(ndgrad::ReadCheckpoint(Path("pretrain/best.ckpt")),
                            trunk.params(), fp);
  trunk.SwapHead(HeadKind::kClassification, HeadKind::kEmbedding, cfg_.seed);
  if (st.next_epoch > 0) {
    ndgrad::RestoreCheckpoint(
        ndgrad::ReadCheckpoint((fs::path(dir) / EpochName(st.next_epoch - 1)).string()),
        trunk.params(), fp);
    Progress("finetune: resuming at epoch " + std::to_string(st.next_epoch));
  }
  RunConfig c = cfg_;
  c.trunk = tc;
  FinetuneContrastive(
      trunk, *data_, c, st,
      StageHook(dir, TrainStage::kContrastive, fp, PipelineStage::kFinetune,
                opt_.halt_after, [this] { WriteMetricsLog(); }, opt_.progress));
  if (st.best_epoch < 0)  // no epochs: the swapped-head model is the result
    ndgrad::WriteCheckpoint((fs::path(dir) / "best.ckpt").string(),
                            ndgrad::ToCheckpoint(trunk.params(), fp, false));
}

Trunk<float> Pipeline::LoadEmbeddingTrunk() const {
  const TrunkConfig tc = ResolvedTrunk();
  Trunk<float> trunk = Trunk<float>::Build(tc, cfg_.seed);
  trunk.SwapHead(HeadKind::kClassification, HeadKind::kEmbedding, cfg_.seed);
  ndgrad::RestoreCheckpoint(ndgrad::ReadCheckpoint(Path("finetune/best.ckpt")),
                            trunk.params(), tc.Fingerprint());
  return trunk;
}

bool Pipeline::EmbedManifest(const std::string &manifest_path,
                             const std::string &out_path) {
  if (!RunThrough(PipelineStage::kFinetune)) return false;
  Trunk<float> trunk = LoadEmbeddingTrunk();
  const Manifest m = LoadManifest(manifest_path);
  EmbeddingStore store;
  for (const UtteranceRecord &u : m.utterances()) {
    const Waveform w = ReadWav(ResolveAudioPath(manifest_path, u.audio_path));
    store[u.utterance_id] =
        EmbedUtterance(trunk, u.utterance_id, Normalize(ComputeSpectrogram(w)));
  }
  WriteEmbeddings(store, out_path);
  Progress("embed: " + std::to_string(store.size()) + " utterances -> " + out_path);
  return true;
}

void Pipeline::Embed() {
  LoadData();
  Trunk<float> trunk = LoadEmbeddingTrunk();
  EmbeddingStore store;
  for (std::size_t i : data_->split.val) {
    const std::string &id = manifest_.utterances()[i].utterance_id;
    store[id] = EmbedUtterance(trunk, id, Normalize(features_.Get(id)));
  }
  WriteEmbeddings(store, Path("embeddings.vxem"));
  Progress("embed: " + std::to_string(store.size()) + " held-out utterances");
}

void Pipeline::Score() {
  LoadData();
  const Manifest val = manifest_.Subset(data_->split.val);
  const TrialList trials = GenRandomTrials(
      val, cfg_.eval.trials, MixHash(cfg_.seed, HashString("eval.trials")));
  SaveTrialList(trials, Path("trials.txt"));
  const EmbeddingStore store = ReadEmbeddings(Path("embeddings.vxem"));
  for (int p = 1; p <= 3; ++p)
    WriteScores(ScoreTrials(trials, store, static_cast<Protocol>(p)),
                Path("scores.p" + std::to_string(p) + ".txt"));
}

void Pipeline::Evaluate() {
  std::string report;
  const StageState pre = LoadStageState(Path("pretrain"), TrainStage::kIdentification);
  const StageState ft = LoadStageState(Path("finetune"), TrainStage::kContrastive);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "pretrain best top-1 (%%)\t%.2f\tepoch %d\n",
                100.0 * pre.best_metric, pre.best_epoch);
  report += buf;
  std::snprintf(buf, sizeof(buf), "finetune best val EER (%%)\t%.2f\tepoch %d\n",
                100.0 * ft.best_metric, ft.best_epoch);
  report += buf;
  for (int p = 1; p <= 3; ++p) {
    report += '\n';
    report += EvaluateScores(ReadScores(Path("scores.p" + std::to_string(p) + ".txt")),
                             ProtocolTitle(p));
  }
  WriteFileAtomic(Path("report.txt"), report);
  std::istringstream lines(report);
  for (std::string line; std::getline(lines, line);) Progress("evaluate: " + line);
}

}  // namespace vexkit
