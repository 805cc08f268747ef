// tools/vexkit.cc

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

// Command-line front end.  Every subcommand takes its randomness from an
// explicit seed; errors map to exit codes 2 (configuration or usage),
// 3 (data or I/O) and 4 (numerical divergence).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "vexkit/dedup.h"
#include "vexkit/embed.h"
#include "vexkit/errors.h"
#include "vexkit/manifest.h"
#include "vexkit/metrics.h"
#include "vexkit/pipeline.h"
#include "vexkit/run-config.h"
#include "vexkit/toy-bench.h"
#include "vexkit/trials.h"

namespace {

using namespace vexkit;

struct ConfigArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string halt_after;
};

void AddConfigOptions(CLI::App *cmd, ConfigArgs &a, bool required = true) {
  auto *opt = cmd->add_option("-c,--config", a.config, "run configuration file")
                  ->check(CLI::ExistingFile);
  if (required) opt->required();
  cmd->add_option("--set", a.overrides, "override one config entry, key=value");
}

RunConfig LoadConfig(const ConfigArgs &a) {
  RunConfig cfg = LoadRunConfig(a.config);
  for (const std::string &kv : a.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      Fail(ErrorKind::kConfig, "--set expects key=value, got '" + kv + "'");
    SetRunConfigValue(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

PipelineOptions MakeOptions(const ConfigArgs &a) {
  PipelineOptions o;
  if (!a.halt_after.empty()) {
    o.halt_after = ParseHaltPoint(a.halt_after);
    if (!o.halt_after)
      Fail(ErrorKind::kConfig, "--halt-after expects pretrain:N or finetune:N");
  }
  o.progress = [](const std::string &line) { std::cerr << line << std::endl; };
  return o;
}

void WriteText(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write '" + path + "'");
  out << text;
  if (!out) Fail(ErrorKind::kIo, "write failed for '" + path + "'");
}

// A halted run is a requested outcome, so it also exits 0.
int RunStage(const ConfigArgs &a, PipelineStage stage) {
  Pipeline p(LoadConfig(a), MakeOptions(a));
  p.RunThrough(stage);
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"vexkit: speaker verification toolkit"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads,
                 "worker threads for dense algebra (default 1, reproducible)")
      ->check(CLI::PositiveNumber);

  // toygen
  ToyBenchSpec toy;
  std::string toy_out;
  auto *toygen = app.add_subcommand("toygen", "generate the synthetic toy corpus");
  toygen->add_option("-o,--out", toy_out, "output directory")->required();
  toygen->add_option("--seed", toy.seed, "corpus seed")->required();
  toygen->add_option("--speakers", toy.n_speakers, "number of speakers");
  toygen->add_option("--utterances", toy.utterances_per_speaker,
                     "utterances per speaker");
  toygen->add_option("--videos", toy.videos_per_speaker, "videos per speaker");
  toygen->add_option("--duration", toy.duration_s, "utterance length in seconds");
  toygen->add_option("--noise", toy.noise_level,
                     "scale of within-speaker variation and additive noise");

  // Stages driven by a run configuration.
  ConfigArgs stage_args[6];
  CLI::App *stage_cmds[6];
  const char *stage_help[6] = {
      "compute and cache spectrograms",
      "softmax identification pre-training",
      "contrastive fine-tuning with hard-negative mining",
      "embed the held-out utterances (or --manifest)",
      "score trials under the three test-time protocols",
      "write the metrics report (or evaluate --scores alone)",
  };
  std::string embed_manifest, embed_out;
  std::string score_trials, score_embeddings, score_out;
  int score_protocol = 0;
  std::string eval_scores;
  for (int i = 0; i < 6; ++i) {
    const auto st = static_cast<PipelineStage>(i);
    stage_cmds[i] = app.add_subcommand(std::string(PipelineStageName(st)), stage_help[i]);
    const bool standalone = st == PipelineStage::kScore || st == PipelineStage::kEvaluate;
    AddConfigOptions(stage_cmds[i], stage_args[i], !standalone);
    if (st == PipelineStage::kPretrain || st == PipelineStage::kFinetune)
      stage_cmds[i]->add_option("--halt-after", stage_args[i].halt_after,
                                "stop after stage:epoch has been saved");
  }
  CLI::App *embed_cmd = stage_cmds[static_cast<int>(PipelineStage::kEmbed)];
  auto *em = embed_cmd->add_option("--manifest", embed_manifest,
                                   "embed every utterance of this manifest instead")
                 ->check(CLI::ExistingFile);
  embed_cmd->add_option("--out", embed_out, "embedding file for --manifest")->needs(em);
  CLI::App *score_cmd = stage_cmds[static_cast<int>(PipelineStage::kScore)];
  score_cmd->add_option("--trials", score_trials, "trial list to score")
      ->check(CLI::ExistingFile);
  score_cmd->add_option("--embeddings", score_embeddings, "embedding file")
      ->check(CLI::ExistingFile);
  score_cmd->add_option("--protocol", score_protocol, "test-time protocol 1, 2 or 3")
      ->check(CLI::Range(1, 3));
  score_cmd->add_option("--out", score_out, "score file to write");
  CLI::App *eval_cmd = stage_cmds[static_cast<int>(PipelineStage::kEvaluate)];
  eval_cmd->add_option("--scores", eval_scores, "score file to evaluate on its own")
      ->check(CLI::ExistingFile);

  // pipeline
  ConfigArgs pipe_args;
  auto *pipeline = app.add_subcommand("pipeline", "run every stage, resuming where left off");
  AddConfigOptions(pipeline, pipe_args);
  pipeline->add_option("--halt-after", pipe_args.halt_after,
                       "stop after stage:epoch has been saved");

  // gen-trials
  std::string gt_manifest, gt_kind = "random", gt_out;
  std::size_t gt_pairs = 0;
  int gt_min_group = 5;
  std::uint64_t gt_seed = 0;
  auto *gen = app.add_subcommand("gen-trials", "generate a verification trial list");
  gen->add_option("-m,--manifest", gt_manifest, "manifest")->required()->check(CLI::ExistingFile);
  gen->add_option("--kind", gt_kind, "random (whole set) or hard (same nationality and gender)")
      ->check(CLI::IsMember({"random", "hard"}));
  gen->add_option("--pairs", gt_pairs, "number of pairs")->required();
  gen->add_option("--min-group", gt_min_group, "smallest eligible group for hard lists");
  gen->add_option("--seed", gt_seed, "generator seed")->required();
  gen->add_option("-o,--out", gt_out, "trial file")->required();

  // dedup
  std::string dd_manifest, dd_embeddings, dd_out, dd_report;
  double dd_threshold = kDefaultDedupThreshold;
  auto *dedup = app.add_subcommand("dedup", "drop near-duplicate utterances per speaker");
  dedup->add_option("-m,--manifest", dd_manifest, "manifest")->required()->check(CLI::ExistingFile);
  dedup->add_option("--embeddings", dd_embeddings, "embedding file covering the manifest")
      ->required()
      ->check(CLI::ExistingFile);
  dedup->add_option("--threshold", dd_threshold, "distance below which segments are duplicates")
      ->check(CLI::PositiveNumber);
  dedup->add_option("-o,--out", dd_out, "deduplicated manifest")->required();
  dedup->add_option("--report", dd_report, "cluster report (keeper then removed ids)");

  // stats
  std::string st_manifest, st_split = "all";
  auto *stats = app.add_subcommand("stats", "dataset statistics of a manifest");
  stats->add_option("-m,--manifest", st_manifest, "manifest")->required()->check(CLI::ExistingFile);
  stats->add_option("--split", st_split, "dev, test or all")
      ->check(CLI::IsMember({"dev", "test", "all"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ExitCodeFor(ErrorKind::kConfig);
  }

  try {
    Eigen::setNbThreads(threads);
    if (toygen->parsed()) {
      const std::string manifest = GenerateToyBench(toy, toy_out);
      const RunConfig cfg = ToyRunConfig(
          std::filesystem::absolute(manifest).string(),
          (std::filesystem::absolute(toy_out) / "run").string(), toy.seed);
      WriteText((std::filesystem::path(toy_out) / "toy.conf").string(), FormatRunConfig(cfg));
      std::cout << manifest << '\n';
      return 0;
    }
    for (int i = 0; i < 6; ++i) {
      if (!stage_cmds[i]->parsed()) continue;
      const auto st = static_cast<PipelineStage>(i);
      const ConfigArgs &a = stage_args[i];
      if (st == PipelineStage::kEvaluate && !eval_scores.empty()) {
        std::cout << EvaluateScores(ReadScores(eval_scores), eval_scores);
        return 0;
      }
      if (st == PipelineStage::kScore && !score_trials.empty()) {
        if (score_embeddings.empty() || score_protocol == 0 || score_out.empty())
          Fail(ErrorKind::kConfig, "score --trials needs --embeddings, --protocol and --out");
        WriteScores(ScoreTrials(LoadTrialList(score_trials), ReadEmbeddings(score_embeddings),
                                static_cast<Protocol>(score_protocol)),
                    score_out);
        return 0;
      }
      if (a.config.empty())
        Fail(ErrorKind::kConfig, std::string(PipelineStageName(st)) + " needs --config");
      if (st == PipelineStage::kEmbed && !embed_manifest.empty()) {
        if (embed_out.empty()) Fail(ErrorKind::kConfig, "embed --manifest needs --out");
        Pipeline p(LoadConfig(a), MakeOptions(a));
        p.EmbedManifest(embed_manifest, embed_out);
        return 0;
      }
      return RunStage(a, st);
    }
    if (pipeline->parsed()) {
      Pipeline p(LoadConfig(pipe_args), MakeOptions(pipe_args));
      if (p.RunAll()) {
        std::ifstream in(p.Path("report.txt"));
        std::cout << in.rdbuf();
      }
      return 0;
    }
    if (gen->parsed()) {
      const Manifest m = LoadManifest(gt_manifest);
      const TrialList t = gt_kind == "hard" ? GenHardTrials(m, gt_pairs, gt_min_group, gt_seed)
                                            : GenRandomTrials(m, gt_pairs, gt_seed);
      VerifyTrialLabels(t, m);
      SaveTrialList(t, gt_out);
      return 0;
    }
    if (dedup->parsed()) {
      const Manifest m = LoadManifest(dd_manifest);
      const EmbeddingStore store = ReadEmbeddings(dd_embeddings);
      const ManifestDedup r = DedupManifest(
          m,
          [&](const std::string &id) -> const std::vector<float> * {
            auto it = store.find(id);
            return it == store.end() ? nullptr : &it->second.full;
          },
          dd_threshold);
      SaveManifest(r.manifest, dd_out);
      if (!dd_report.empty()) {
        std::string text;
        for (const auto &[spk, rep] : r.per_speaker) text += FormatDedupClusters(rep.clusters);
        WriteText(dd_report, text);
      }
      std::cout << "removed " << r.num_removed << " of " << m.utterances().size()
                << " utterances\n";
      return 0;
    }
    if (stats->parsed()) {
      std::optional<Split> split;
      if (st_split != "all") split = ParseSplit(st_split);
      std::cout << FormatStats(ManifestStats(LoadManifest(st_manifest), split));
      return 0;
    }
  } catch (const Error &e) {
    std::cerr << "vexkit: error: " << e.what() << '\n';
    return ExitCodeFor(e.kind());
  } catch (const std::exception &e) {
    std::cerr << "vexkit: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
