// manifest.cc

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

#include "vexkit/manifest.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "vexkit/errors.h"

namespace vexkit {

std::string_view GenderName(Gender g) {
  switch (g) {
    case Gender::kMale:
      return "male";
    case Gender::kFemale:
      return "female";
    default:
      return "unknown";
  }
}

std::string_view SplitName(Split s) { return s == Split::kDev ? "dev" : "test"; }

std::optional<Gender> ParseGender(std::string_view s) {
  if (s == "male") return Gender::kMale;
  if (s == "female") return Gender::kFemale;
  if (s == "unknown") return Gender::kUnknown;
  return std::nullopt;
}

std::optional<Split> ParseSplit(std::string_view s) {
  if (s == "dev") return Split::kDev;
  if (s == "test") return Split::kTest;
  return std::nullopt;
}

Manifest Manifest::Create(std::vector<SpeakerRecord> speakers,
                          std::vector<UtteranceRecord> utterances) {
  Manifest m;
  m.speakers_ = std::move(speakers);
  m.utterances_ = std::move(utterances);
  for (std::size_t i = 0; i < m.speakers_.size(); ++i) {
    const auto &s = m.speakers_[i];
    if (s.speaker_id.empty()) Fail(ErrorKind::kData, "empty speaker id");
    if (!m.speaker_index_.emplace(s.speaker_id, i).second)
      Fail(ErrorKind::kData, "duplicate speaker id '" + s.speaker_id + "'");
  }
  for (std::size_t i = 0; i < m.utterances_.size(); ++i) {
    const auto &u = m.utterances_[i];
    if (u.utterance_id.empty()) Fail(ErrorKind::kData, "empty utterance id");
    if (!m.utterance_index_.emplace(u.utterance_id, i).second)
      Fail(ErrorKind::kData,
           "duplicate utterance id '" + u.utterance_id + "'");
    if (!m.speaker_index_.count(u.speaker_id))
      Fail(ErrorKind::kData, "utterance '" + u.utterance_id +
                                 "' references unknown speaker '" +
                                 u.speaker_id + "'");
    if (!(u.duration_s > 0.0) || !std::isfinite(u.duration_s))
      Fail(ErrorKind::kData,
           "utterance '" + u.utterance_id + "' has non-positive duration");
  }
  return m;
}

const SpeakerRecord *Manifest::FindSpeaker(std::string_view id) const {
  auto it = speaker_index_.find(std::string(id));
  return it == speaker_index_.end() ? nullptr : &speakers_[it->second];
}

const UtteranceRecord *Manifest::FindUtterance(std::string_view id) const {
  std::size_t i = UtteranceIndex(id);
  return i == npos ? nullptr : &utterances_[i];
}

std::size_t Manifest::UtteranceIndex(std::string_view id) const {
  auto it = utterance_index_.find(std::string(id));
  return it == utterance_index_.end() ? npos : it->second;
}

std::vector<std::size_t> Manifest::UtterancesOf(
    std::string_view speaker_id) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < utterances_.size(); ++i)
    if (utterances_[i].speaker_id == speaker_id) out.push_back(i);
  return out;
}

std::set<std::string> Manifest::SpeakerIds(std::optional<Split> split) const {
  std::set<std::string> ids;
  for (const auto &s : speakers_)
    if (!split || s.split == *split) ids.insert(s.speaker_id);
  return ids;
}

Manifest Manifest::Subset(const std::vector<std::size_t> &indices) const {
  std::vector<std::size_t> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::unordered_set<std::string> used;
  std::vector<UtteranceRecord> utts;
  for (std::size_t i : sorted) {
    utts.push_back(utterances_.at(i));
    used.insert(utterances_[i].speaker_id);
  }
  std::vector<SpeakerRecord> spk;
  for (const auto &s : speakers_)
    if (used.count(s.speaker_id)) spk.push_back(s);
  return Create(std::move(spk), std::move(utts));
}

namespace {

std::vector<std::string_view> SplitTabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return out;
}

[[noreturn]] void ParseFail(std::size_t line_no, const std::string &msg) {
  Fail(ErrorKind::kData,
       "manifest line " + std::to_string(line_no) + ": " + msg);
}

}  // namespace

Manifest ParseManifest(std::string_view text) {
  std::vector<SpeakerRecord> speakers;
  std::vector<UtteranceRecord> utterances;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool saw_header = false;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!saw_header) {
      if (line != kManifestHeader)
        ParseFail(line_no, "expected header '" + std::string(kManifestHeader) +
                               "'");
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;
    auto fields = SplitTabs(line);
    if (fields[0] == "S") {
      if (fields.size() != 5)
        ParseFail(line_no, "speaker record needs 4 fields, got " +
                               std::to_string(fields.size() - 1));
      SpeakerRecord s;
      s.speaker_id = fields[1];
      auto g = ParseGender(fields[2]);
      if (!g) ParseFail(line_no, "bad gender '" + std::string(fields[2]) + "'");
      s.gender = *g;
      s.nationality = fields[3];
      if (s.nationality.empty()) ParseFail(line_no, "empty nationality");
      auto sp = ParseSplit(fields[4]);
      if (!sp) ParseFail(line_no, "bad split '" + std::string(fields[4]) + "'");
      s.split = *sp;
      speakers.push_back(std::move(s));
    } else if (fields[0] == "U") {
      if (fields.size() != 6)
        ParseFail(line_no, "utterance record needs 5 fields, got " +
                               std::to_string(fields.size() - 1));
      UtteranceRecord u;
      u.utterance_id = fields[1];
      u.speaker_id = fields[2];
      u.video_id = fields[3];
      u.audio_path = fields[4];
      std::string_view d = fields[5];
      auto res = std::from_chars(d.data(), d.data() + d.size(), u.duration_s);
      if (res.ec != std::errc() || res.ptr != d.data() + d.size() ||
          !(u.duration_s > 0.0) || !std::isfinite(u.duration_s))
        ParseFail(line_no, "bad duration '" + std::string(d) + "'");
      utterances.push_back(std::move(u));
    } else {
      ParseFail(line_no, "unknown record kind '" + std::string(fields[0]) + "'");
    }
  }
  if (!saw_header) ParseFail(1, "missing header");
  return Manifest::Create(std::move(speakers), std::move(utterances));
}

Manifest LoadManifest(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open manifest '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseManifest(ss.str());
}

std::string FormatManifest(const Manifest &m) {
  std::string out(kManifestHeader);
  out += '\n';
  for (const auto &s : m.speakers()) {
    out += "S\t" + s.speaker_id + '\t' + std::string(GenderName(s.gender)) +
           '\t' + s.nationality + '\t' + std::string(SplitName(s.split)) + '\n';
  }
  char buf[64];
  for (const auto &u : m.utterances()) {
    // Shortest representation that parses back to the same double.
    auto res = std::to_chars(buf, buf + sizeof(buf), u.duration_s);
    out += "U\t" + u.utterance_id + '\t' + u.speaker_id + '\t' + u.video_id +
           '\t' + u.audio_path + '\t' + std::string(buf, res.ptr) + '\n';
  }
  return out;
}

void SaveManifest(const Manifest &m, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write manifest '" + path + "'");
  out << FormatManifest(m);
  if (!out) Fail(ErrorKind::kIo, "write failed for '" + path + "'");
}

StatsReport ManifestStats(const Manifest &m, std::optional<Split> split) {
  StatsReport r;
  std::unordered_set<std::string> included;
  for (const auto &s : m.speakers()) {
    if (split && s.split != *split) continue;
    included.insert(s.speaker_id);
    ++r.num_pois;
    if (s.gender == Gender::kMale) ++r.num_male_pois;
  }
  std::unordered_set<std::string> videos;
  for (const auto &u : m.utterances()) {
    if (!included.count(u.speaker_id)) continue;
    ++r.num_utterances;
    r.total_seconds += u.duration_s;
    videos.insert(u.video_id);
  }
  r.num_videos = videos.size();
  if (r.num_pois > 0) {
    r.avg_videos_per_poi = static_cast<double>(r.num_videos) / r.num_pois;
    r.avg_utterances_per_poi =
        static_cast<double>(r.num_utterances) / r.num_pois;
  }
  if (r.num_utterances > 0)
    r.avg_utterance_length_s = r.total_seconds / r.num_utterances;
  return r;
}

std::string FormatStats(const StatsReport &r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "# of POIs\t%zu\n"
                "# of male POIs\t%zu\n"
                "# of videos\t%zu\n"
                "# of hours\t%.0f\n"
                "# of utterances\t%zu\n"
                "Avg # of videos per POI\t%.0f\n"
                "Avg # of utterances per POI\t%.0f\n"
                "Avg length of utterances (s)\t%.1f\n",
                r.num_pois, r.num_male_pois, r.num_videos,
                std::floor(r.total_hours() + 0.5), r.num_utterances,
                std::floor(r.avg_videos_per_poi + 0.5),
                std::floor(r.avg_utterances_per_poi + 0.5),
                r.avg_utterance_length_s);
  return buf;
}

std::vector<std::string> CheckDisjoint(const Manifest &m,
                                       const std::set<std::string> &other_ids) {
  std::vector<std::string> out;
  for (const auto &id : m.SpeakerIds(Split::kDev))
    if (other_ids.count(id)) out.push_back(id);
  return out;
}

}  // namespace vexkit
