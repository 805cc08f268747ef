// tests/trials-test.cc

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

#include <filesystem>
#include <set>

#include "doctest.h"
#include "fixtures.h"
#include "vexkit/errors.h"
#include "vexkit/trials.h"

using namespace vexkit;
using namespace vexkit::testing;

TEST_CASE("random trials") {
  Manifest m = GroupedManifest({{"X", Gender::kMale, 5}}, 3);
  TrialList t = GenRandomTrials(m, 10, 7);
  REQUIRE(t.pairs.size() == 10);
  int targets = 0;
  for (const auto &p : t.pairs) targets += p.target;
  CHECK(targets == 5);
  CHECK_NOTHROW(VerifyTrialLabels(t, m));
  CHECK(FormatTrialList(GenRandomTrials(m, 10, 7)) == FormatTrialList(t));
  CHECK(FormatTrialList(GenRandomTrials(m, 10, 8)) != FormatTrialList(t));

  TrialList odd = GenRandomTrials(m, 11, 1);
  targets = 0;
  for (const auto &p : odd.pairs) targets += p.target;
  CHECK(targets == 5);

  // every speaker eventually appears
  TrialList big = GenRandomTrials(GroupedManifest({{"X", Gender::kMale, 20}}, 8), 400, 3);
  Manifest bm = GroupedManifest({{"X", Gender::kMale, 20}}, 8);
  std::set<std::string> seen;
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto &p : big.pairs) {
    seen.insert(bm.FindUtterance(p.utt_a)->speaker_id);
    seen.insert(bm.FindUtterance(p.utt_b)->speaker_id);
    CHECK(pairs.insert(std::minmax(p.utt_a, p.utt_b)).second);
  }
  CHECK(seen.size() == 20);
  VerifyTrialLabels(big, bm);
}

TEST_CASE("random trial infeasibility") {
  Manifest single = GroupedManifest({{"X", Gender::kMale, 4}}, 1);
  CHECK_THROWS_AS(GenRandomTrials(single, 4, 1), Error);
  Manifest one = GroupedManifest({{"X", Gender::kMale, 1}}, 5);
  CHECK_THROWS_AS(GenRandomTrials(one, 4, 1), Error);
  // 2 speakers x 2 utterances: only 2 target and 4 nontarget pairs exist
  Manifest tiny = GroupedManifest({{"X", Gender::kMale, 2}}, 2);
  CHECK_THROWS_AS(GenRandomTrials(tiny, 20, 1), Error);
}

TEST_CASE("hard trials") {
  Manifest m = GroupedManifest({{"USA", Gender::kMale, 8},
                                {"USA", Gender::kFemale, 5},
                                {"UK", Gender::kMale, 4},
                                {"unknown", Gender::kMale, 9},
                                {"India", Gender::kUnknown, 7}},
                               10);
  auto groups = EligibleGroups(m, 5);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].nationality == "USA");
  CHECK(groups[0].gender == Gender::kMale);
  CHECK(groups[1].gender == Gender::kFemale);

  TrialList t = GenHardTrials(m, 500, 5, 11);
  REQUIRE(t.pairs.size() == 500);
  VerifyTrialLabels(t, m);
  int usa_male = 0;
  for (const auto &p : t.pairs) {
    const auto *a = m.FindSpeaker(m.FindUtterance(p.utt_a)->speaker_id);
    const auto *b = m.FindSpeaker(m.FindUtterance(p.utt_b)->speaker_id);
    CHECK(a->nationality == b->nationality);
    CHECK(a->gender == b->gender);
    CHECK(a->nationality != "UK");
    CHECK(a->nationality != "unknown");
    usa_male += a->gender == Gender::kMale;
  }
  // weighted 8:5 by group size
  CHECK(usa_male > 250);
  CHECK(FormatTrialList(GenHardTrials(m, 500, 5, 11)) == FormatTrialList(t));

  Manifest single = GroupedManifest({{"FR", Gender::kFemale, 6}}, 5);
  for (const auto &p : GenHardTrials(single, 40, 5, 2).pairs) {
    CHECK(single.FindSpeaker(single.FindUtterance(p.utt_a)->speaker_id)->nationality == "FR");
  }
  CHECK_THROWS_AS(GenHardTrials(GroupedManifest({{"FR", Gender::kFemale, 4}}, 3), 10, 5, 1),
                  Error);
}

TEST_CASE("trial list parsing") {
  TrialList t = ParseTrialList("1 id100/v1/u1 id100/v2/u3\n0 id100/v1/u1 id203/v5/u2\n");
  REQUIRE(t.pairs.size() == 2);
  CHECK(t.pairs[0].target);
  CHECK(t.pairs[0].utt_b == "id100/v2/u3");
  CHECK(!t.pairs[1].target);

  // 40-speaker fixture in the original style, one line per trial
  std::string text;
  int lines = 0;
  for (int s = 0; s < 40; ++s)
    for (int k = 0; k < 3; ++k) {
      text += (k % 2 ? "0 " : "1 ") + std::string("id") + std::to_string(10270 + s) + "/v" +
              std::to_string(k) + "/00001.wav id" + std::to_string(k % 2 ? 10309 - s : 10270 + s) +
              "/w" + std::to_string(k) + "/00002.wav\n";
      ++lines;
    }
  CHECK(ParseTrialList(text).pairs.size() == static_cast<std::size_t>(lines));
  CHECK(FormatTrialList(ParseTrialList(text)) == text);

  auto err = [](const std::string &s) {
    try {
      ParseTrialList(s);
    } catch (const Error &e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(err("1 a b\n2 a b\n").find("line 2") != std::string::npos);
  CHECK(err("1 a\n").find("line 1") != std::string::npos);
  CHECK(err("1 a b c\n").find("line 1") != std::string::npos);
  CHECK(err("\n\n0 a a\n").find("line 3") != std::string::npos);

  auto path = (std::filesystem::temp_directory_path() / "vexkit-trials-test.txt").string();
  SaveTrialList(t, path);
  CHECK(LoadTrialList(path).pairs == t.pairs);
  std::filesystem::remove(path);
}
