// vexkit/manifest.h

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

#ifndef VEXKIT_MANIFEST_H_
#define VEXKIT_MANIFEST_H_

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vexkit {

enum class Gender { kMale, kFemale, kUnknown };
enum class Split { kDev, kTest };

std::string_view GenderName(Gender g);
std::string_view SplitName(Split s);
std::optional<Gender> ParseGender(std::string_view s);
std::optional<Split> ParseSplit(std::string_view s);

inline constexpr std::string_view kUnknownNationality = "unknown";

struct SpeakerRecord {
  std::string speaker_id;
  Gender gender = Gender::kUnknown;
  std::string nationality{kUnknownNationality};
  Split split = Split::kDev;

  bool operator==(const SpeakerRecord &) const = default;
};

struct UtteranceRecord {
  std::string utterance_id;
  std::string speaker_id;
  std::string video_id;  // opaque grouping key
  std::string audio_path;
  double duration_s = 0.0;

  bool operator==(const UtteranceRecord &) const = default;
};

/// Catalog of speakers and their utterances.  Instances built through
/// Manifest::Create or LoadManifest always satisfy the invariants: unique
/// nonempty ids, every utterance's speaker exists, positive durations.  Since
/// each speaker carries exactly one split, dev and test identity sets are
/// disjoint by construction.
class Manifest {
 public:
  Manifest() = default;

  // Validates and indexes; throws Error(kData) on any invariant violation.
  static Manifest Create(std::vector<SpeakerRecord> speakers,
                         std::vector<UtteranceRecord> utterances);

  const std::vector<SpeakerRecord> &speakers() const { return speakers_; }
  const std::vector<UtteranceRecord> &utterances() const {
    return utterances_;
  }

  const SpeakerRecord *FindSpeaker(std::string_view id) const;
  const UtteranceRecord *FindUtterance(std::string_view id) const;
  // Index into utterances(), or npos.
  std::size_t UtteranceIndex(std::string_view id) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  // Indices into utterances() grouped by speaker, in file order.
  std::vector<std::size_t> UtterancesOf(std::string_view speaker_id) const;

  std::set<std::string> SpeakerIds(std::optional<Split> split = {}) const;

  // Sub-manifest keeping only the listed utterances (and the speakers they
  // reference), preserving file order.
  Manifest Subset(const std::vector<std::size_t> &utterance_indices) const;

  bool operator==(const Manifest &o) const {
    return speakers_ == o.speakers_ && utterances_ == o.utterances_;
  }

 private:
  std::vector<SpeakerRecord> speakers_;
  std::vector<UtteranceRecord> utterances_;
  std::unordered_map<std::string, std::size_t> speaker_index_;
  std::unordered_map<std::string, std::size_t> utterance_index_;
};

inline constexpr std::string_view kManifestHeader = "vexkit-manifest v1";

Manifest LoadManifest(const std::string &path);
Manifest ParseManifest(std::string_view text);
void SaveManifest(const Manifest &m, const std::string &path);
std::string FormatManifest(const Manifest &m);

struct StatsReport {
  std::size_t num_pois = 0;
  std::size_t num_male_pois = 0;
  std::size_t num_videos = 0;
  std::size_t num_utterances = 0;
  double total_seconds = 0.0;
  double avg_videos_per_poi = 0.0;
  double avg_utterances_per_poi = 0.0;
  double avg_utterance_length_s = 0.0;

  double total_hours() const { return total_seconds / 3600.0; }
};

// Aggregates over all speakers, or over one split only when given.
StatsReport ManifestStats(const Manifest &m, std::optional<Split> split = {});

// Human-readable table; hours rounded half-up for display only.
std::string FormatStats(const StatsReport &r);

// Dev-split speaker ids of `m` that also appear in `other_ids`, sorted.
std::vector<std::string> CheckDisjoint(const Manifest &m,
                                       const std::set<std::string> &other_ids);

}  // namespace vexkit

#endif  // VEXKIT_MANIFEST_H_
