// include/vexkit/pipeline.h

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

#ifndef VEXKIT_PIPELINE_H_
#define VEXKIT_PIPELINE_H_

#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "vexkit/embed.h"
#include "vexkit/run-config.h"
#include "vexkit/train.h"

namespace vexkit {

enum class PipelineStage { kPreprocess, kPretrain, kFinetune, kEmbed, kScore, kEvaluate };

std::string_view PipelineStageName(PipelineStage s);
std::optional<PipelineStage> ParsePipelineStage(std::string_view s);

// Stops the run right after the given training epoch has been persisted,
// leaving the work directory in the state an interrupted run would.
struct HaltPoint {
  PipelineStage stage = PipelineStage::kFinetune;
  int epoch = 0;
};
std::optional<HaltPoint> ParseHaltPoint(std::string_view s);  // "finetune:2"

struct PipelineOptions {
  std::optional<HaltPoint> halt_after;
  std::function<void(const std::string &)> progress;  // one line per event
};

// Work directory layout, relative to paths.workdir:
//   config.txt                 snapshot; a different config is refused
//   spec/<utterance>.spec      spectrogram cache
//   pretrain/, finetune/       epoch-NNN.ckpt, best.ckpt, state.txt
//   metrics.log                one line per training epoch
//   embeddings.vxem, trials.txt, scores.p{1,2,3}.txt, report.txt
//   <stage>.done               completion markers
class Pipeline {
 public:
  Pipeline(RunConfig cfg, PipelineOptions opt = {});
  Pipeline(const Pipeline &) = delete;
  Pipeline &operator=(const Pipeline &) = delete;

  // Runs every stage up to and including `last`, skipping completed ones and
  // resuming a partly trained stage from its last epoch checkpoint.
  // Returns false when the halt point was reached.
  bool RunThrough(PipelineStage last);
  bool RunAll() { return RunThrough(PipelineStage::kEvaluate); }

  // Embeds every utterance of another manifest with the fine-tuned model,
  // training it first if needed.  Returns false when halted.
  bool EmbedManifest(const std::string &manifest_path, const std::string &out_path);

  std::string Path(const std::string &relative) const;
  bool Done(PipelineStage s) const;

 private:
  void Prepare();
  void Preprocess();
  void LoadData();
  void Pretrain();
  void Finetune();
  void Embed();
  void Score();
  void Evaluate();
  void MarkDone(PipelineStage s);
  void WriteMetricsLog();
  void Progress(const std::string &line) const;
  TrunkConfig ResolvedTrunk() const;
  Trunk<float> LoadEmbeddingTrunk() const;

  RunConfig cfg_;
  PipelineOptions opt_;
  Manifest manifest_;
  bool prepared_ = false;
  FeatureStore features_;
  std::optional<TrainData> data_;
};

// Protocol report block for a score file, used by both the pipeline and the
// stand-alone evaluate command.
std::string EvaluateScores(const std::vector<ScoreLine> &scores,
                           const std::string &title);

// Relative audio paths are taken relative to the manifest's directory.
std::string ResolveAudioPath(const std::string &manifest_path,
                             const std::string &audio_path);

// Spectrogram cache path for an utterance under `dir`; rejects ids that
// would escape the directory.
std::string SpectrogramCachePath(const std::string &dir,
                                 const std::string &utterance_id);

// The configuration used by the toy benchmark.
RunConfig ToyRunConfig(const std::string &manifest_path, const std::string &workdir,
                       std::uint64_t seed);

}  // namespace vexkit

#endif  // VEXKIT_PIPELINE_H_
