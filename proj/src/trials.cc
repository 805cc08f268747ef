// src/trials.cc

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

#include "vexkit/trials.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "vexkit/errors.h"
#include "vexkit/rng.h"

namespace vexkit {

namespace {

constexpr int kMaxRetries = 100;

// Speakers in manifest order with their utterance indices.
struct Pool {
  std::vector<std::string> speakers;
  std::vector<std::vector<std::size_t>> utts;
};

Pool MakePool(const Manifest &m, const std::vector<std::string> &ids) {
  Pool p;
  for (const auto &id : ids) {
    auto u = m.UtterancesOf(id);
    if (u.empty()) continue;
    p.speakers.push_back(id);
    p.utts.push_back(std::move(u));
  }
  return p;
}

class PairDrawer {
 public:
  PairDrawer(const Manifest &m, Rng &rng) : m_(m), rng_(rng) {}

  // Returns false if the pair was already drawn.
  bool Add(bool target, std::size_t a, std::size_t b, std::vector<Trial> *out) {
    auto key = std::minmax(a, b);
    if (!seen_.insert(key).second) return false;
    out->push_back({target, m_.utterances()[a].utterance_id,
                    m_.utterances()[b].utterance_id});
    return true;
  }

  bool Target(const Pool &p, std::vector<Trial> *out) {
    std::vector<std::size_t> ok;
    for (std::size_t i = 0; i < p.speakers.size(); ++i)
      if (p.utts[i].size() >= 2) ok.push_back(i);
    if (ok.empty())
      Fail(ErrorKind::kData, "target trial requested but no speaker has two utterances");
    const auto &u = p.utts[ok[UniformIndex(rng_, ok.size())]];
    const std::size_t i = UniformIndex(rng_, u.size());
    std::size_t j = UniformIndex(rng_, u.size() - 1);
    if (j >= i) ++j;
    return Add(true, u[i], u[j], out);
  }

  bool Nontarget(const Pool &p, std::vector<Trial> *out) {
    if (p.speakers.size() < 2)
      Fail(ErrorKind::kData, "nontarget trial requested with fewer than two speakers");
    const std::size_t a = UniformIndex(rng_, p.speakers.size());
    std::size_t b = UniformIndex(rng_, p.speakers.size() - 1);
    if (b >= a) ++b;
    const auto &ua = p.utts[a], &ub = p.utts[b];
    return Add(false, ua[UniformIndex(rng_, ua.size())], ub[UniformIndex(rng_, ub.size())], out);
  }

 private:
  const Manifest &m_;
  Rng &rng_;
  std::set<std::pair<std::size_t, std::size_t>> seen_;
};

std::vector<bool> ShuffledLabels(std::size_t n, Rng &rng) {
  std::vector<bool> labels(n, false);
  for (std::size_t i = 0; i < n / 2; ++i) labels[i] = true;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = UniformIndex(rng, i);
    bool tmp = labels[i - 1];
    labels[i - 1] = labels[j];
    labels[j] = tmp;
  }
  return labels;
}

template <typename DrawFn>
void DrawWithRetries(DrawFn draw) {
  for (int attempt = 0; attempt < kMaxRetries; ++attempt)
    if (draw()) return;
  Fail(ErrorKind::kData, "could not draw a fresh trial pair after " +
                             std::to_string(kMaxRetries) + " attempts");
}

}  // namespace

TrialList GenRandomTrials(const Manifest &m, std::size_t n_pairs,
                          std::uint64_t seed) {
  if (n_pairs < 2) Fail(ErrorKind::kConfig, "random trials need n_pairs >= 2");
  std::vector<std::string> ids;
  for (const auto &s : m.speakers()) ids.push_back(s.speaker_id);
  Pool pool = MakePool(m, ids);
  if (pool.speakers.size() < 2)
    Fail(ErrorKind::kData, "random trials need at least two speakers with utterances");
  Rng rng = SubStream(seed, "trials.random");
  PairDrawer drawer(m, rng);
  TrialList t;
  t.name = "random";
  t.fingerprint = "random seed=" + std::to_string(seed) + " n=" + std::to_string(n_pairs);
  for (bool target : ShuffledLabels(n_pairs, rng))
    DrawWithRetries([&] {
      return target ? drawer.Target(pool, &t.pairs) : drawer.Nontarget(pool, &t.pairs);
    });
  return t;
}

std::vector<TrialGroup> EligibleGroups(const Manifest &m, int min_group) {
  std::map<std::pair<std::string, Gender>, std::vector<std::string>> groups;
  for (const auto &s : m.speakers()) {
    if (s.nationality == kUnknownNationality || s.gender == Gender::kUnknown) continue;
    if (m.UtterancesOf(s.speaker_id).empty()) continue;
    groups[{s.nationality, s.gender}].push_back(s.speaker_id);
  }
  std::vector<TrialGroup> out;
  for (auto &[key, spk] : groups) {
    if (static_cast<int>(spk.size()) < min_group) continue;
    std::sort(spk.begin(), spk.end());
    out.push_back({key.first, key.second, spk});
  }
  return out;
}

TrialList GenHardTrials(const Manifest &m, std::size_t n_pairs, int min_group,
                        std::uint64_t seed) {
  if (n_pairs < 2) Fail(ErrorKind::kConfig, "hard trials need n_pairs >= 2");
  if (min_group < 2) Fail(ErrorKind::kConfig, "hard trials need min_group >= 2");
  auto groups = EligibleGroups(m, min_group);
  if (groups.empty())
    Fail(ErrorKind::kData, "no nationality-gender group has " +
                               std::to_string(min_group) + " speakers");
  std::vector<Pool> pools;
  std::vector<std::size_t> weight_end;
  std::size_t total = 0;
  for (const auto &g : groups) {
    pools.push_back(MakePool(m, g.speakers));
    total += g.speakers.size();
    weight_end.push_back(total);
  }
  Rng rng = SubStream(seed, "trials.hard");
  PairDrawer drawer(m, rng);
  TrialList t;
  t.name = "hard";
  t.fingerprint = "hard seed=" + std::to_string(seed) + " n=" + std::to_string(n_pairs) +
                  " min_group=" + std::to_string(min_group);
  for (bool target : ShuffledLabels(n_pairs, rng))
    DrawWithRetries([&] {
      const std::size_t r = UniformIndex(rng, total);
      const std::size_t g =
          std::upper_bound(weight_end.begin(), weight_end.end(), r) - weight_end.begin();
      return target ? drawer.Target(pools[g], &t.pairs) : drawer.Nontarget(pools[g], &t.pairs);
    });
  return t;
}

void VerifyTrialLabels(const TrialList &t, const Manifest &m) {
  for (std::size_t i = 0; i < t.pairs.size(); ++i) {
    const Trial &p = t.pairs[i];
    const auto *a = m.FindUtterance(p.utt_a);
    const auto *b = m.FindUtterance(p.utt_b);
    const std::string where = "trial " + std::to_string(i + 1) + ": ";
    if (!a || !b)
      Fail(ErrorKind::kData, where + "unknown utterance '" + (a ? p.utt_b : p.utt_a) + "'");
    if (p.utt_a == p.utt_b) Fail(ErrorKind::kData, where + "pair repeats '" + p.utt_a + "'");
    if ((a->speaker_id == b->speaker_id) != p.target)
      Fail(ErrorKind::kData, where + "label disagrees with speaker ids");
  }
}

TrialList ParseTrialList(std::string_view text, const std::string &name) {
  TrialList t;
  t.name = name;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string label, a, b, extra;
    fields >> label >> a >> b;
    if (b.empty() || (fields >> extra) || (label != "0" && label != "1"))
      Fail(ErrorKind::kData, "trial list line " + std::to_string(line_no) +
                                 ": expected 'label utt_a utt_b' with label 0 or 1");
    if (a == b)
      Fail(ErrorKind::kData, "trial list line " + std::to_string(line_no) +
                                 ": pair repeats '" + a + "'");
    t.pairs.push_back({label == "1", a, b});
  }
  return t;
}

TrialList LoadTrialList(const std::string &path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open trial list '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseTrialList(ss.str(), path);
}

std::string FormatTrialList(const TrialList &t) {
  std::string out;
  for (const auto &p : t.pairs) {
    out += p.target ? '1' : '0';
    out += ' ' + p.utt_a + ' ' + p.utt_b + '\n';
  }
  return out;
}

void SaveTrialList(const TrialList &t, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write trial list '" + path + "'");
  out << FormatTrialList(t);
  if (!out) Fail(ErrorKind::kIo, "write failed for '" + path + "'");
}

}  // namespace vexkit
