// tests/manifest-test.cc

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

#include <algorithm>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "vexkit/errors.h"
#include "vexkit/manifest.h"

using namespace vexkit;

namespace {

const char kFixture[] =
    "vexkit-manifest v1\n"
    "S\tid1\tmale\tUSA\tdev\n"
    "S\tid2\tfemale\tUK\tdev\n"
    "S\tid3\tunknown\tunknown\ttest\n"
    "U\tid1/v1/u1\tid1\tv1\ta/1.wav\t4\n"
    "U\tid1/v1/u2\tid1\tv1\ta/2.wav\t6\n"
    "U\tid2/v1/u1\tid2\tv1\tb/1.wav\t10\n"
    "U\tid2/v2/u1\tid2\tv2\tb/2.wav\t2.5\n"
    "U\tid3/v9/u1\tid3\tv9\tc/1.wav\t3.25\n"
    "U\tid3/v9/u2\tid3\tv9\tc/2.wav\t8\n";

std::string ErrorText(const std::string &text) {
  try {
    ParseManifest(text);
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kData);
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("load: empty, fixture and errors") {
  Manifest empty = ParseManifest("vexkit-manifest v1\n");
  CHECK(empty.speakers().empty());
  CHECK(empty.utterances().empty());
  StatsReport z = ManifestStats(empty);
  CHECK(z.num_pois == 0);
  CHECK(z.avg_utterance_length_s == 0.0);
  CHECK(z.avg_utterances_per_poi == 0.0);

  Manifest m = ParseManifest(kFixture);
  CHECK(m.speakers().size() == 3);
  CHECK(m.utterances().size() == 6);
  CHECK(m.FindSpeaker("id2")->nationality == "UK");
  CHECK(m.FindUtterance("id2/v2/u1")->duration_s == 2.5);
  CHECK(m.UtteranceIndex("nope") == Manifest::npos);

  std::string missing = std::string(kFixture) + "U\tx/u\tidX\tv1\tx.wav\t1\n";
  CHECK(ErrorText(missing).find("idX") != std::string::npos);
  CHECK(ErrorText(missing).find("x/u") != std::string::npos);
  CHECK(ErrorText(std::string(kFixture) + "S\tid1\tmale\tUSA\tdev\n").find("duplicate") !=
        std::string::npos);
  CHECK(ErrorText(std::string(kFixture) + "U\tid1/v1/u1\tid1\tv1\ta.wav\t1\n")
            .find("duplicate") != std::string::npos);
  CHECK(ErrorText("vexkit-manifest v1\nS\tid1\tmale\n").find("line 2") != std::string::npos);
  CHECK(ErrorText("vexkit-manifest v2\n").find("line 1") != std::string::npos);
  CHECK(ErrorText("vexkit-manifest v1\nS\ta\tmale\tX\tdev\nU\tu\ta\tv\tp\t0\n")
            .find("line 3") != std::string::npos);
  CHECK_THROWS_AS(LoadManifest("/nonexistent/manifest.tsv"), Error);
}

TEST_CASE("round trip through a file") {
  Manifest m = ParseManifest(kFixture);
  auto path = std::filesystem::temp_directory_path() / "vexkit-manifest-test.tsv";
  SaveManifest(m, path.string());
  CHECK(LoadManifest(path.string()) == m);
  CHECK(FormatManifest(ParseManifest(FormatManifest(m))) == FormatManifest(m));
  std::filesystem::remove(path);

  // awkward durations survive exactly
  auto s = m.speakers();
  auto u = m.utterances();
  u[0].duration_s = 0.1 + 0.2;
  u[1].duration_s = 1.0 / 3.0;
  Manifest odd = Manifest::Create(s, u);
  CHECK(ParseManifest(FormatManifest(odd)) == odd);
}

TEST_CASE("stats") {
  Manifest m = ParseManifest(kFixture);
  StatsReport r = ManifestStats(m);
  CHECK(r.num_pois == 3);
  CHECK(r.num_male_pois == 1);
  CHECK(r.num_videos == 3);  // v1, v2, v9
  CHECK(r.num_utterances == 6);
  CHECK(r.total_seconds == doctest::Approx(33.75));
  CHECK(r.avg_utterances_per_poi == doctest::Approx(2.0));
  CHECK(r.avg_videos_per_poi == doctest::Approx(1.0));

  StatsReport dev = ManifestStats(m, Split::kDev);
  CHECK(dev.num_pois == 2);
  CHECK(dev.num_utterances == 4);

  Manifest two = Manifest::Create(
      {{"a", Gender::kMale, "X", Split::kDev}, {"b", Gender::kFemale, "Y", Split::kDev}},
      {{"a1", "a", "v", "p", 4.0}, {"a2", "a", "v", "p", 6.0}, {"b1", "b", "w", "p", 10.0}});
  CHECK(ManifestStats(two).avg_utterance_length_s == doctest::Approx(20.0 / 3.0));
  CHECK(FormatStats(ManifestStats(two)).find("6.7") != std::string::npos);

  // permutation invariance
  auto s = m.speakers();
  auto u = m.utterances();
  std::mt19937 g(5);
  std::shuffle(s.begin(), s.end(), g);
  std::shuffle(u.begin(), u.end(), g);
  StatsReport p = ManifestStats(Manifest::Create(s, u));
  CHECK(p.num_videos == r.num_videos);
  CHECK(p.num_male_pois == r.num_male_pois);
  CHECK(p.total_seconds == doctest::Approx(r.total_seconds).epsilon(1e-15));
}

TEST_CASE("check disjoint") {
  std::vector<SpeakerRecord> s;
  for (const char *id : {"d1", "d2", "d3", "d4", "d5"}) s.push_back({id, Gender::kMale, "X", Split::kDev});
  s.push_back({"t1", Gender::kFemale, "Y", Split::kTest});
  Manifest m = Manifest::Create(s, {});
  CHECK(CheckDisjoint(m, {}).empty());
  auto dev = m.SpeakerIds(Split::kDev);
  auto all = CheckDisjoint(m, dev);
  CHECK(std::set<std::string>(all.begin(), all.end()) == dev);
  CHECK(CheckDisjoint(m, {"d4", "zz", "d2", "t1"}) == std::vector<std::string>{"d2", "d4"});
  CHECK(CheckDisjoint(m, m.SpeakerIds(Split::kTest)).empty());
}
