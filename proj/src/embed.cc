// src/embed.cc

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

#include "vexkit/embed.h"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vexkit/errors.h"

namespace vexkit {

namespace {

std::vector<Vector> RowsOf(const ndgrad::Tensor<float> &t) {
  const int n = t.dim(0), d = t.dim(1);
  std::vector<Vector> rows(n);
  for (int i = 0; i < n; ++i) rows[i].assign(t.data() + i * d, t.data() + (i + 1) * d);
  return rows;
}

ndgrad::Tensor<float> EmbeddingsOf(Trunk<float> &trunk, const ndgrad::Tensor<float> &x) {
  if (trunk.head() != HeadKind::kEmbedding)
    Fail(ErrorKind::kInvalidArgument, "embedding requires a trunk with the embedding head");
  return *trunk.Run(x, ndgrad::BatchNormMode::kEval).embedding;
}

}  // namespace

std::optional<Protocol> ParseProtocol(std::string_view s) {
  if (s == "1" || s == "full") return Protocol::kFullPool;
  if (s == "2" || s == "crop-mean") return Protocol::kCropMean;
  if (s == "3" || s == "crop-pairs") return Protocol::kCropPairs;
  return std::nullopt;
}

Vector EmbedFull(Trunk<float> &trunk, const Spectrogram &utterance) {
  return RowsOf(EmbeddingsOf(trunk, MakeInputBatch<float>({&utterance})))[0];
}

CropEmbeddings EmbedCrops(Trunk<float> &trunk, const Spectrogram &utterance) {
  // Short utterances give repeated offsets; each distinct crop runs once so
  // repeated crops have bitwise-identical embeddings.
  const Spectrogram padded =
      utterance.frames() < kCropFrames ? WrapPadFrames(utterance, kCropFrames) : utterance;
  const std::vector<int> offsets = TenCropOffsets(padded.frames());
  std::vector<int> distinct;
  std::vector<std::size_t> slot;
  for (int off : offsets) {
    if (distinct.empty() || distinct.back() != off) distinct.push_back(off);
    slot.push_back(distinct.size() - 1);
  }
  std::vector<Spectrogram> crops;
  for (int off : distinct) crops.push_back(SliceFrames(padded, off, kCropFrames));
  std::vector<const Spectrogram *> ptrs;
  for (const auto &c : crops) ptrs.push_back(&c);
  std::vector<Vector> rows = RowsOf(EmbeddingsOf(trunk, MakeInputBatch<float>(ptrs)));
  CropEmbeddings out;
  for (std::size_t k : slot) out.crops.push_back(rows[k]);
  out.mean = MeanNormalized(out.crops);
  return out;
}

UtteranceEmbedding EmbedUtterance(Trunk<float> &trunk, const std::string &id,
                                  const Spectrogram &utterance) {
  UtteranceEmbedding e;
  e.utterance_id = id;
  e.full = EmbedFull(trunk, utterance);
  CropEmbeddings c = EmbedCrops(trunk, utterance);
  e.crop_mean = std::move(c.mean);
  e.crops = std::move(c.crops);
  return e;
}

double EuclideanDistance(const Vector &a, const Vector &b) {
  if (a.size() != b.size())
    Fail(ErrorKind::kInvalidArgument, "embedding dimensions differ: " +
                                          std::to_string(a.size()) + " vs " +
                                          std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

Vector MeanNormalized(const std::vector<Vector> &v) {
  if (v.empty()) Fail(ErrorKind::kInvalidArgument, "mean of no embeddings");
  // The mean of identical unit vectors is the vector itself.
  bool same = true;
  for (const auto &x : v) same = same && x == v[0];
  double n0 = 0.0;
  for (float x : v[0]) n0 += static_cast<double>(x) * x;
  if (same && std::abs(std::sqrt(n0) - 1.0) < 1e-6) return v[0];
  std::vector<double> acc(v[0].size(), 0.0);
  for (const auto &x : v) {
    if (x.size() != acc.size()) Fail(ErrorKind::kInvalidArgument, "embedding dimensions differ");
    for (std::size_t i = 0; i < x.size(); ++i) acc[i] += x[i];
  }
  double norm = 0.0;
  for (double &a : acc) {
    a /= static_cast<double>(v.size());
    norm += a * a;
  }
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) Fail(ErrorKind::kNumerical, "mean embedding has zero norm");
  Vector out(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i] / norm);
  return out;
}

double ScorePair(const UtteranceEmbedding &a, const UtteranceEmbedding &b,
                 Protocol protocol) {
  auto need = [&](bool ok, const char *what) {
    if (!ok)
      Fail(ErrorKind::kInvalidArgument, "protocol " +
                                            std::to_string(static_cast<int>(protocol)) +
                                            " needs " + what + " for '" + a.utterance_id +
                                            "' and '" + b.utterance_id + "'");
  };
  switch (protocol) {
    case Protocol::kFullPool:
      need(!a.full.empty() && !b.full.empty(), "full-utterance embeddings");
      return EuclideanDistance(a.full, b.full);
    case Protocol::kCropMean:
      need(!a.crop_mean.empty() && !b.crop_mean.empty(), "crop-mean embeddings");
      return EuclideanDistance(a.crop_mean, b.crop_mean);
    case Protocol::kCropPairs: {
      need(!a.crops.empty() && !b.crops.empty(), "crop embeddings");
      // Pair sums in a fixed order so that (a, b) and (b, a) agree exactly.
      const bool swap = b.utterance_id < a.utterance_id;
      const auto &x = swap ? b.crops : a.crops;
      const auto &y = swap ? a.crops : b.crops;
      double s = 0.0;
      for (const auto &u : x)
        for (const auto &v : y) s += EuclideanDistance(u, v);
      return s / static_cast<double>(x.size() * y.size());
    }
  }
  Fail(ErrorKind::kInvalidArgument, "unknown protocol");
}

namespace {

constexpr char kEmbMagic[4] = {'V', 'X', 'E', 'M'};
constexpr std::uint32_t kEmbVersion = 1;

void PutU32(std::string &out, std::uint32_t v) {
  out.append(reinterpret_cast<const char *>(&v), sizeof(v));
}

void PutVec(std::string &out, const Vector &v, std::uint32_t dim) {
  if (v.size() != dim) Fail(ErrorKind::kInvalidArgument, "embedding dimension mismatch");
  out.append(reinterpret_cast<const char *>(v.data()), v.size() * sizeof(float));
}

class Reader {
 public:
  Reader(const std::string &bytes, const std::string &path) : b_(bytes), path_(path) {}
  void Take(void *dst, std::size_t n) {
    if (pos_ + n > b_.size()) Fail(ErrorKind::kData, "'" + path_ + "': truncated embedding file");
    std::memcpy(dst, b_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t U32() {
    std::uint32_t v;
    Take(&v, sizeof(v));
    return v;
  }
  Vector Vec(std::uint32_t dim) {
    Vector v(dim);
    Take(v.data(), dim * sizeof(float));
    return v;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  const std::string &b_;
  const std::string &path_;
  std::size_t pos_ = 0;
};

}  // namespace

void WriteEmbeddings(const EmbeddingStore &store, const std::string &path) {
  std::uint32_t dim = store.empty() ? 0 : static_cast<std::uint32_t>(store.begin()->second.full.size());
  std::string out(kEmbMagic, 4);
  PutU32(out, kEmbVersion);
  PutU32(out, dim);
  PutU32(out, static_cast<std::uint32_t>(store.size()));
  for (const auto &[id, e] : store) {
    PutU32(out, static_cast<std::uint32_t>(id.size()));
    out += id;
    PutVec(out, e.full, dim);
    PutVec(out, e.crop_mean, dim);
    PutU32(out, static_cast<std::uint32_t>(e.crops.size()));
    for (const auto &c : e.crops) PutVec(out, c, dim);
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) Fail(ErrorKind::kIo, "cannot write '" + tmp + "'");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) Fail(ErrorKind::kIo, "write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    Fail(ErrorKind::kIo, "cannot rename '" + tmp + "' to '" + path + "'");
}

EmbeddingStore ReadEmbeddings(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) Fail(ErrorKind::kIo, "cannot open embedding file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string bytes = ss.str();
  Reader r(bytes, path);
  char magic[4];
  r.Take(magic, 4);
  if (std::memcmp(magic, kEmbMagic, 4) != 0)
    Fail(ErrorKind::kData, "'" + path + "' is not an embedding file");
  if (r.U32() != kEmbVersion) Fail(ErrorKind::kData, "'" + path + "': unsupported version");
  const std::uint32_t dim = r.U32(), count = r.U32();
  EmbeddingStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    UtteranceEmbedding e;
    e.utterance_id.resize(r.U32());
    r.Take(e.utterance_id.data(), e.utterance_id.size());
    e.full = r.Vec(dim);
    e.crop_mean = r.Vec(dim);
    e.crops.resize(r.U32());
    for (auto &c : e.crops) c = r.Vec(dim);
    std::string id = e.utterance_id;
    if (!store.emplace(id, std::move(e)).second)
      Fail(ErrorKind::kData, "'" + path + "': duplicate utterance '" + id + "'");
  }
  if (!r.done()) Fail(ErrorKind::kData, "'" + path + "': trailing bytes");
  return store;
}

std::vector<ScoreLine> ScoreTrials(const TrialList &trials, const EmbeddingStore &store,
                                   Protocol protocol) {
  std::vector<ScoreLine> out;
  out.reserve(trials.pairs.size());
  auto get = [&](const std::string &id) -> const UtteranceEmbedding & {
    auto it = store.find(id);
    if (it == store.end()) Fail(ErrorKind::kData, "no embedding for utterance '" + id + "'");
    return it->second;
  };
  for (std::size_t i = 0; i < trials.pairs.size(); ++i) {
    const Trial &t = trials.pairs[i];
    out.push_back({"t" + std::to_string(i + 1), t.utt_a, t.utt_b,
                   ScorePair(get(t.utt_a), get(t.utt_b), protocol), t.target});
  }
  return out;
}

std::string FormatScores(const std::vector<ScoreLine> &scores) {
  std::string out(kScoreHeader);
  out += '\n';
  char buf[64];
  for (const auto &s : scores) {
    auto res = std::to_chars(buf, buf + sizeof(buf), s.distance);
    out += s.trial_id + '\t' + s.utt_a + '\t' + s.utt_b + '\t' + std::string(buf, res.ptr);
    if (s.target) out += *s.target ? "\ttarget" : "\tnontarget";
    out += '\n';
  }
  return out;
}

std::vector<ScoreLine> ParseScores(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::vector<ScoreLine> out;
  auto bad = [&](const std::string &msg) {
    Fail(ErrorKind::kData, "score file line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != kScoreHeader) bad("expected header '" + std::string(kScoreHeader) + "'");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream fields(line);
    for (std::string x; std::getline(fields, x, '\t');) f.push_back(x);
    if (f.size() != 4 && f.size() != 5) bad("expected 4 or 5 tab-separated fields");
    ScoreLine s{f[0], f[1], f[2], 0.0, std::nullopt};
    auto res = std::from_chars(f[3].data(), f[3].data() + f[3].size(), s.distance);
    if (res.ec != std::errc() || res.ptr != f[3].data() + f[3].size() ||
        !std::isfinite(s.distance) || s.distance < 0.0)
      bad("bad distance '" + f[3] + "'");
    if (f.size() == 5) {
      if (f[4] == "target") s.target = true;
      else if (f[4] == "nontarget") s.target = false;
      else bad("bad label '" + f[4] + "'");
    }
    out.push_back(std::move(s));
  }
  if (line_no == 0) Fail(ErrorKind::kData, "score file is empty");
  return out;
}

void WriteScores(const std::vector<ScoreLine> &scores, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write score file '" + path + "'");
  out << FormatScores(scores);
  if (!out) Fail(ErrorKind::kIo, "write failed for '" + path + "'");
}

std::vector<ScoreLine> ReadScores(const std::string &path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open score file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseScores(ss.str());
}

ScoreSet ToScoreSet(const std::vector<ScoreLine> &scores) {
  ScoreSet s;
  s.reserve(scores.size());
  for (const auto &l : scores) {
    if (!l.target) Fail(ErrorKind::kData, "trial '" + l.trial_id + "' has no label");
    s.push_back({l.distance, *l.target});
  }
  return s;
}

}  // namespace vexkit
