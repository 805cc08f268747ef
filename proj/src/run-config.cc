// src/run-config.cc

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

#include "vexkit/run-config.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "vexkit/errors.h"
#include "vexkit/frontend.h"

namespace vexkit {

namespace {

[[noreturn]] void Bad(std::string_view key, const std::string &msg) {
  Fail(ErrorKind::kConfig, "config key '" + std::string(key) + "': " + msg);
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

template <typename N>
N ParseNumber(std::string_view key, std::string_view v) {
  N out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    Bad(key, "cannot parse '" + std::string(v) + "'");
  if constexpr (std::is_floating_point_v<N>)
    if (!std::isfinite(out)) Bad(key, "value must be finite");
  return out;
}

int ParseInt(std::string_view key, std::string_view v) {
  return ParseNumber<int>(key, v);
}
double ParseReal(std::string_view key, std::string_view v) {
  return ParseNumber<double>(key, v);
}

void RequireFixed(std::string_view key, std::string_view v, int expected) {
  if (ParseInt(key, v) != expected)
    Bad(key, "only " + std::to_string(expected) + " is supported");
}

using Setter = std::function<void(RunConfig &, std::string_view key,
                                  std::string_view value)>;

const std::map<std::string, Setter, std::less<>> &Setters() {
  static const auto *table = new std::map<std::string, Setter, std::less<>>{
      {"seed",
       [](RunConfig &c, auto k, auto v) { c.seed = ParseNumber<std::uint64_t>(k, v); }},
      {"paths.manifest", [](RunConfig &c, auto, auto v) { c.manifest_path = v; }},
      {"paths.workdir", [](RunConfig &c, auto, auto v) { c.workdir = v; }},
      {"trunk.family",
       [](RunConfig &c, auto k, auto v) {
         auto f = ParseTrunkFamily(v);
         if (!f) Bad(k, "unknown family '" + std::string(v) + "'");
         c.trunk.family = *f;
       }},
      {"trunk.width",
       [](RunConfig &c, auto k, auto v) {
         auto r = ParseRational(v);
         if (!r) Bad(k, "expected a fraction such as 1/8");
         c.trunk.width = *r;
       }},
      {"trunk.num_classes",
       [](RunConfig &c, auto k, auto v) { c.trunk.num_classes = ParseInt(k, v); }},
      {"trunk.embed_dim",
       [](RunConfig &c, auto k, auto v) { c.trunk.embed_dim = ParseInt(k, v); }},
      {"frontend.window", [](RunConfig &, auto k, auto v) { RequireFixed(k, v, kWindowSamples); }},
      {"frontend.hop", [](RunConfig &, auto k, auto v) { RequireFixed(k, v, kHopSamples); }},
      {"frontend.fft", [](RunConfig &, auto k, auto v) { RequireFixed(k, v, kFftLength); }},
      {"frontend.crop_frames",
       [](RunConfig &, auto k, auto v) { RequireFixed(k, v, kCropFrames); }},
      {"optimizer.momentum",
       [](RunConfig &c, auto k, auto v) { c.optimizer.momentum = ParseReal(k, v); }},
      {"optimizer.weight_decay",
       [](RunConfig &c, auto k, auto v) { c.optimizer.weight_decay = ParseReal(k, v); }},
      {"optimizer.lr_initial",
       [](RunConfig &c, auto k, auto v) { c.optimizer.lr_initial = ParseReal(k, v); }},
      {"optimizer.lr_final",
       [](RunConfig &c, auto k, auto v) { c.optimizer.lr_final = ParseReal(k, v); }},
      {"optimizer.epochs",
       [](RunConfig &c, auto k, auto v) { c.optimizer.epochs = ParseInt(k, v); }},
      {"optimizer.batch_size",
       [](RunConfig &c, auto k, auto v) { c.optimizer.batch_size = ParseInt(k, v); }},
      {"pretrain.crops_per_utterance",
       [](RunConfig &c, auto k, auto v) { c.pretrain.crops_per_utterance = ParseInt(k, v); }},
      {"pretrain.patience",
       [](RunConfig &c, auto k, auto v) { c.pretrain.patience = ParseInt(k, v); }},
      {"finetune.epochs",
       [](RunConfig &c, auto k, auto v) { c.finetune.epochs = ParseInt(k, v); }},
      {"finetune.lr_scale",
       [](RunConfig &c, auto k, auto v) { c.finetune.lr_scale = ParseReal(k, v); }},
      {"finetune.margin",
       [](RunConfig &c, auto k, auto v) { c.finetune.margin = ParseReal(k, v); }},
      {"finetune.pos_fraction",
       [](RunConfig &c, auto k, auto v) { c.finetune.pos_fraction = ParseReal(k, v); }},
      {"finetune.keep_fraction",
       [](RunConfig &c, auto k, auto v) { c.finetune.keep_fraction = ParseReal(k, v); }},
      {"finetune.hard_mix",
       [](RunConfig &c, auto k, auto v) { c.finetune.hard_mix = ParseReal(k, v); }},
      {"finetune.pairs_per_epoch",
       [](RunConfig &c, auto k, auto v) { c.finetune.pairs_per_epoch = ParseInt(k, v); }},
      {"finetune.patience",
       [](RunConfig &c, auto k, auto v) { c.finetune.patience = ParseInt(k, v); }},
      {"eval.trials", [](RunConfig &c, auto k, auto v) { c.eval.trials = ParseInt(k, v); }},
  };
  return *table;
}

std::string Real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void RunConfig::Validate() const {
  TrunkConfig t = trunk;
  if (t.num_classes == 0) t.num_classes = 1;  // resolved from the manifest
  t.Validate();
  optimizer.Validate();
  auto bad = [](const std::string &m) { Fail(ErrorKind::kConfig, m); };
  if (manifest_path.empty()) bad("paths.manifest is required");
  if (workdir.empty()) bad("paths.workdir is required");
  if (pretrain.crops_per_utterance < 1)
    bad("pretrain.crops_per_utterance must be positive");
  if (pretrain.patience < 1) bad("pretrain.patience must be positive");
  if (finetune.epochs < 0) bad("finetune.epochs must be >= 0");
  if (!(finetune.lr_scale >= 0.0)) bad("finetune.lr_scale must be >= 0");
  if (!(finetune.margin >= 0.0)) bad("finetune.margin must be >= 0");
  if (!(finetune.pos_fraction >= 0.0 && finetune.pos_fraction <= 1.0))
    bad("finetune.pos_fraction must be in [0, 1]");
  if (!(finetune.keep_fraction > 0.0 && finetune.keep_fraction <= 1.0))
    bad("finetune.keep_fraction must be in (0, 1]");
  if (!(finetune.hard_mix >= 0.0 && finetune.hard_mix <= 1.0))
    bad("finetune.hard_mix must be in [0, 1]");
  if (finetune.pairs_per_epoch < 1) bad("finetune.pairs_per_epoch must be positive");
  if (finetune.patience < 1) bad("finetune.patience must be positive");
  if (optimizer.batch_size < 2) bad("optimizer.batch_size must be at least 2");
  if (eval.trials < 2) bad("eval.trials must be at least 2");
}

void SetRunConfigValue(RunConfig &cfg, std::string_view key,
                       std::string_view value) {
  const auto &table = Setters();
  auto it = table.find(key);
  if (it == table.end())
    Fail(ErrorKind::kConfig, "unknown config key '" + std::string(key) + "'");
  it->second(cfg, key, Trim(value));
}

RunConfig ParseRunConfig(std::string_view text) {
  RunConfig cfg;
  cfg.trunk.num_classes = 0;
  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    ++line_no;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      Fail(ErrorKind::kConfig,
           "config line " + std::to_string(line_no) + ": expected key = value");
    const std::string_view key = Trim(line.substr(0, eq));
    if (!seen.insert(std::string(key)).second)
      Fail(ErrorKind::kConfig, "config line " + std::to_string(line_no) +
                                   ": duplicate key '" + std::string(key) + "'");
    try {
      SetRunConfigValue(cfg, key, line.substr(eq + 1));
    } catch (const Error &e) {
      Fail(ErrorKind::kConfig,
           "config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!seen.count("seed")) Fail(ErrorKind::kConfig, "config: seed is mandatory");
  return cfg;
}

RunConfig LoadRunConfig(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseRunConfig(ss.str());
}

std::string FormatRunConfig(const RunConfig &c) {
  std::ostringstream o;
  o << "seed = " << c.seed << '\n'
    << "paths.manifest = " << c.manifest_path << '\n'
    << "paths.workdir = " << c.workdir << '\n'
    << "trunk.family = " << TrunkFamilyName(c.trunk.family) << '\n'
    << "trunk.width = " << FormatRational(c.trunk.width) << '\n'
    << "trunk.num_classes = " << c.trunk.num_classes << '\n'
    << "trunk.embed_dim = " << c.trunk.embed_dim << '\n'
    << "frontend.window = " << kWindowSamples << '\n'
    << "frontend.hop = " << kHopSamples << '\n'
    << "frontend.fft = " << kFftLength << '\n'
    << "frontend.crop_frames = " << kCropFrames << '\n'
    << "optimizer.momentum = " << Real(c.optimizer.momentum) << '\n'
    << "optimizer.weight_decay = " << Real(c.optimizer.weight_decay) << '\n'
    << "optimizer.lr_initial = " << Real(c.optimizer.lr_initial) << '\n'
    << "optimizer.lr_final = " << Real(c.optimizer.lr_final) << '\n'
    << "optimizer.epochs = " << c.optimizer.epochs << '\n'
    << "optimizer.batch_size = " << c.optimizer.batch_size << '\n'
    << "pretrain.crops_per_utterance = " << c.pretrain.crops_per_utterance << '\n'
    << "pretrain.patience = " << c.pretrain.patience << '\n'
    << "finetune.epochs = " << c.finetune.epochs << '\n'
    << "finetune.lr_scale = " << Real(c.finetune.lr_scale) << '\n'
    << "finetune.margin = " << Real(c.finetune.margin) << '\n'
    << "finetune.pos_fraction = " << Real(c.finetune.pos_fraction) << '\n'
    << "finetune.keep_fraction = " << Real(c.finetune.keep_fraction) << '\n'
    << "finetune.hard_mix = " << Real(c.finetune.hard_mix) << '\n'
    << "finetune.pairs_per_epoch = " << c.finetune.pairs_per_epoch << '\n'
    << "finetune.patience = " << c.finetune.patience << '\n'
    << "eval.trials = " << c.eval.trials << '\n';
  return o.str();
}

}  // namespace vexkit
