// tests/dataset_test.cc

// Copyright 2026  The vocart Authors

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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "test_util.h"
#include "vocart/dataset.h"
#include "vocart/errors.h"
#include "vocart/toy.h"

namespace vocart {
namespace {

namespace fs = std::filesystem;
using testing_util::ReadFile;
using testing_util::TempDir;

std::vector<std::string> Speakers(int n) {
  std::vector<std::string> s;
  for (int i = 0; i < n; ++i) s.push_back("s" + std::to_string(100 + i));
  return s;
}

// ------------------------------------------------------------- allocation

TEST(AllocateSpeakers, QuarterQuarterHalf) {
  for (int n : {4, 8, 12, 20, 100}) {
    SpeakerAllocation a = AllocateSpeakers(Speakers(n), 1);
    EXPECT_EQ(a.real_only.size(), static_cast<size_t>(n / 4)) << n;
    EXPECT_EQ(a.fake_only.size(), static_cast<size_t>(n / 4)) << n;
    EXPECT_EQ(a.mixed.size(), static_cast<size_t>(n / 2)) << n;
  }
}

TEST(AllocateSpeakers, RemainderGoesToMixed) {
  SpeakerAllocation a = AllocateSpeakers(Speakers(10), 1);
  EXPECT_EQ(a.real_only.size(), 2u);
  EXPECT_EQ(a.fake_only.size(), 2u);
  EXPECT_EQ(a.mixed.size(), 6u);
}

TEST(AllocateSpeakers, DisjointCoverAndSeeded) {
  std::vector<std::string> spk = Speakers(16);
  SpeakerAllocation a = AllocateSpeakers(spk, 7);
  std::vector<std::string> reversed(spk.rbegin(), spk.rend());
  SpeakerAllocation b = AllocateSpeakers(reversed, 7);
  EXPECT_EQ(a.real_only, b.real_only);
  EXPECT_EQ(a.fake_only, b.fake_only);
  EXPECT_EQ(a.mixed, b.mixed);
  std::set<std::string> all;
  for (auto *g : {&a.real_only, &a.fake_only, &a.mixed})
    for (auto &s : *g) EXPECT_TRUE(all.insert(s).second);
  EXPECT_EQ(all, std::set<std::string>(spk.begin(), spk.end()));
  bool differs = false;
  for (uint64_t seed = 8; seed < 20 && !differs; ++seed)
    differs = AllocateSpeakers(spk, seed).real_only != a.real_only;
  EXPECT_TRUE(differs);
}

TEST(AllocateSpeakers, Errors) {
  EXPECT_THROW(AllocateSpeakers(Speakers(3), 0), ArgumentError);
  EXPECT_THROW(AllocateSpeakers({"a", "b", "c", "a"}, 0), ArgumentError);
}

// --------------------------------------------------------------- manifest

Manifest SyntheticManifest(int speakers, int per_speaker) {
  Manifest m;
  m.registry = {{1, "v1"}, {2, "v2"}};
  m.build_seed = 5;
  int k = 0;
  for (int s = 0; s < speakers; ++s) {
    for (int u = 0; u < per_speaker; ++u, ++k) {
      UtteranceRecord r;
      r.speaker_id = "spk" + std::to_string(s);
      r.utterance_id = r.speaker_id + "/u" + std::to_string(u);
      r.audio_path = r.utterance_id + ".wav";
      // speakers cycle through real-only, fake-only, mixed, mixed
      const int kind = s % 4;
      const bool fake = kind == 1 || (kind >= 2 && u % 2 == 1);
      r.label = fake ? 1 : 0;
      r.vocoder_class = fake ? 1 + k % 2 : 0;
      r.duration = 1.0 + 0.01 * u;
      m.records.push_back(r);
    }
  }
  return m;
}

TEST(Manifest, FormatParseRoundTrip) {
  Manifest m = SyntheticManifest(4, 3);
  m.records[2].split = Split::kDev;
  for (auto &r : m.records)
    if (r.speaker_id == "spk0") r.split = Split::kDev;
  m.records[0].duration = 1.0 / 3.0;
  const std::string text = FormatManifest(m);
  EXPECT_EQ(text.rfind("#librivoc-manifest v1\n", 0), 0u);
  Manifest back = ParseManifest(text);
  EXPECT_EQ(back.records, m.records);
  EXPECT_EQ(back.registry, m.registry);
  EXPECT_EQ(back.build_seed, m.build_seed);
  EXPECT_EQ(FormatManifest(back), text);
}

TEST(Manifest, FileRoundTripSetsBaseDir) {
  TempDir dir;
  Manifest m = SyntheticManifest(4, 2);
  WriteManifest(m, dir / "m.tsv");
  Manifest back = ReadManifest(dir / "m.tsv");
  EXPECT_EQ(back.records, m.records);
  EXPECT_EQ(back.base_dir, dir.path());
  EXPECT_EQ(back.Resolve(back.records[0]), dir.path() / "spk0/u0.wav");
  EXPECT_THROW(ReadManifest(dir / "none.tsv"), IoError);
}

TEST(Manifest, MalformedText) {
  EXPECT_THROW(ParseManifest("no header\n"), FormatError);
  EXPECT_THROW(ParseManifest("#librivoc-manifest v1\n"), FormatError);
  EXPECT_THROW(ParseManifest("#librivoc-manifest v1\na\tb\tc\n#registry {}\n"),
               FormatError);
  const std::string good = FormatManifest(SyntheticManifest(4, 1));
  EXPECT_NO_THROW(ParseManifest(good));
  std::string bad_label = good;
  const size_t pos = bad_label.find("\t0\t0\ttrain");
  ASSERT_NE(pos, std::string::npos);
  bad_label.replace(pos, 10, "\tx\t0\ttrain");
  EXPECT_THROW(ParseManifest(bad_label), FormatError);
}

TEST(Manifest, ValidateCatchesInconsistency) {
  Manifest m = SyntheticManifest(4, 2);
  EXPECT_NO_THROW(m.Validate());
  {
    Manifest x = m;
    x.records[0].label = 1;  // real class with fake label
    EXPECT_THROW(x.Validate(), ArgumentError);
  }
  {
    Manifest x = m;
    x.records[1].utterance_id = x.records[0].utterance_id;
    EXPECT_THROW(x.Validate(), ArgumentError);
  }
  {
    Manifest x = m;
    for (auto &r : x.records)
      if (r.label == 1) r.vocoder_class = 3;
    EXPECT_THROW(x.Validate(), ArgumentError);
  }
  {
    Manifest x = m;
    x.records[0].split = Split::kTest;  // spk0 now in train and test
    EXPECT_THROW(x.Validate(), ArgumentError);
  }
  {
    Manifest x = m;
    x.records[0].duration = 0.0;
    EXPECT_THROW(x.Validate(), ArgumentError);
  }
}

TEST(Manifest, SplitNames) {
  EXPECT_EQ(SplitName(Split::kDev), "dev");
  EXPECT_EQ(ParseSplit("test"), Split::kTest);
  EXPECT_THROW(ParseSplit("valid"), ArgumentError);
}

// ------------------------------------------------------------------ split

std::map<Split, std::set<std::string>> SpeakersBySplit(const Manifest &m) {
  std::map<Split, std::set<std::string>> out;
  for (const auto &r : m.records) out[r.split].insert(r.speaker_id);
  return out;
}

TEST(SplitManifest, EightyTenTen) {
  Manifest m = SplitManifest(SyntheticManifest(20, 3), {0.8, 0.1, 0.1}, 1);
  auto by = SpeakersBySplit(m);
  EXPECT_EQ(by[Split::kTrain].size(), 16u);
  EXPECT_EQ(by[Split::kDev].size(), 2u);
  EXPECT_EQ(by[Split::kTest].size(), 2u);
}

TEST(SplitManifest, SpeakerDisjointAndWithinOneSpeaker) {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + static_cast<int>(rng.Index(40));
    double a = rng.Uniform(0.2, 1.0), b = rng.Uniform(0.05, 0.5),
           c = rng.Uniform(0.05, 0.5);
    const double sum = a + b + c;
    SplitFractions f{a / sum, b / sum, c / sum};
    f.test = 1.0 - f.train - f.dev;
    Manifest m = SplitManifest(SyntheticManifest(n, 2), f, trial);
    auto by = SpeakersBySplit(m);
    std::set<std::string> seen;
    for (auto &[split, spk] : by)
      for (auto &s : spk) EXPECT_TRUE(seen.insert(s).second);
    EXPECT_EQ(seen.size(), static_cast<size_t>(n));
    const double fr[3] = {f.train, f.dev, f.test};
    for (int s = 0; s < 3; ++s) {
      const size_t got = by[static_cast<Split>(s)].size();
      EXPECT_GE(got, 1u);
      if (n * fr[s] >= 1.0) {
        EXPECT_LE(std::abs(static_cast<double>(got) - n * fr[s]), 1.0 + 1e-9)
            << "n=" << n << " split " << s;
      }
    }
  }
}

TEST(SplitManifest, EverySplitSeesEveryKindWhenPossible) {
  Manifest m = SplitManifest(SyntheticManifest(12, 2), {0.34, 0.33, 0.33}, 4);
  std::map<Split, std::set<int>> labels;
  for (const auto &r : m.records) labels[r.split].insert(r.label);
  for (Split s : {Split::kTrain, Split::kDev, Split::kTest})
    EXPECT_EQ(labels[s].size(), 2u) << SplitName(s);
}

TEST(SplitManifest, Errors) {
  Manifest m = SyntheticManifest(4, 2);
  EXPECT_THROW(SplitManifest(m, {0.5, 0.5, 0.0}, 0), ArgumentError);
  EXPECT_THROW(SplitManifest(m, {0.5, 0.3, 0.3}, 0), ArgumentError);
  EXPECT_THROW(SplitManifest(SyntheticManifest(2, 2), {0.8, 0.1, 0.1}, 0),
               ArgumentError);
  Manifest s1 = SplitManifest(m, {0.5, 0.25, 0.25}, 3);
  Manifest s2 = SplitManifest(m, {0.5, 0.25, 0.25}, 3);
  EXPECT_EQ(s1.records, s2.records);
}

// ------------------------------------------------------------------ build

struct ToyFixture {
  TempDir root{"build"};
  MelParams mel;
  VocoderRegistry registry;

  explicit ToyFixture(int speakers = 4, int utts = 10, uint64_t seed = 1) {
    ToyCorpusOptions o;
    o.speakers = speakers;
    o.utterances_per_speaker = utts;
    o.min_seconds = 0.2;
    o.max_seconds = 0.3;
    o.seed = seed;
    WriteToyCorpus(root / "src", o);
    std::vector<BackendSpec> specs = DefaultToyBackends(0);
    for (auto &s : specs) s.n_iters = 2;
    registry = VocoderRegistry::FromSpecs(specs, mel);
  }
};

TEST(BuildCorpus, CountsFollowTheAllocationRule) {
  ToyFixture fx;
  BuildReport rep = BuildCorpus(fx.root / "src", fx.registry, fx.mel, 3,
                                fx.root / "out");
  const Manifest &m = rep.manifest;
  EXPECT_TRUE(rep.errors.empty());
  ASSERT_EQ(m.records.size(), 40u);
  std::map<std::string, std::pair<int, int>> per_speaker;  // real, fake
  std::map<int, int> per_class;
  for (const auto &r : m.records) {
    (r.label ? per_speaker[r.speaker_id].second : per_speaker[r.speaker_id].first)++;
    per_class[r.vocoder_class]++;
    EXPECT_EQ(r.label == 1, r.vocoder_class > 0);
    EXPECT_EQ(r.split, Split::kTrain);
  }
  EXPECT_EQ(per_class[0], 20);
  EXPECT_EQ(per_class[1], 10);
  EXPECT_EQ(per_class[2], 10);
  SpeakerAllocation a =
      AllocateSpeakers({"spk00", "spk01", "spk02", "spk03"}, 3);
  EXPECT_EQ(per_speaker[a.real_only[0]], std::make_pair(10, 0));
  EXPECT_EQ(per_speaker[a.fake_only[0]], std::make_pair(0, 10));
  for (auto &s : a.mixed) EXPECT_EQ(per_speaker[s], std::make_pair(5, 5));
}

TEST(BuildCorpus, PathsExistAndDurationsMatch) {
  ToyFixture fx;
  BuildReport rep = BuildCorpus(fx.root / "src", fx.registry, fx.mel, 3,
                                fx.root / "out");
  Manifest m = ReadManifest(rep.manifest_path);
  EXPECT_EQ(m.records, rep.manifest.records);
  for (const auto &r : m.records) {
    const fs::path p = m.Resolve(r);
    ASSERT_TRUE(fs::exists(p)) << p;
    Waveform w = LoadAudio(p);
    EXPECT_NEAR(w.duration(), r.duration, 1e-3);
    if (r.label == 1) {
      EXPECT_EQ(r.audio_path.begin()->string(), "vocoded");
    }
  }
}

TEST(BuildCorpus, RebuildIsByteIdentical) {
  ToyFixture fx;
  BuildCorpus(fx.root / "src", fx.registry, fx.mel, 3, fx.root / "out1");
  BuildOptions two;
  two.workers = 2;
  BuildCorpus(fx.root / "src", fx.registry, fx.mel, 3, fx.root / "out2", two);
  EXPECT_EQ(ReadFile(fx.root / "out1/manifest.tsv"),
            ReadFile(fx.root / "out2/manifest.tsv"));
  for (const auto &e : fs::recursive_directory_iterator(fx.root / "out1/vocoded")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), fx.root / "out1");
    EXPECT_EQ(ReadFile(e.path()), ReadFile(fx.root / "out2" / rel)) << rel;
  }
}

TEST(BuildCorpus, OddCountsFavourReal) {
  ToyFixture fx(8, 5);
  BuildReport rep = BuildCorpus(fx.root / "src", fx.registry, fx.mel, 4,
                                fx.root / "out");
  SpeakerAllocation a = AllocateSpeakers(
      {"spk00", "spk01", "spk02", "spk03", "spk04", "spk05", "spk06", "spk07"}, 4);
  std::map<std::string, int> fakes;
  for (const auto &r : rep.manifest.records) fakes[r.speaker_id] += r.label;
  for (auto &s : a.mixed) EXPECT_EQ(fakes[s], 2) << s;
  // 2 fake-only * 5 + 4 mixed * 2 = 18 fakes, dealt 9/9.
  std::map<int, int> per_class;
  for (const auto &r : rep.manifest.records) per_class[r.vocoder_class]++;
  EXPECT_EQ(per_class[1], 9);
  EXPECT_EQ(per_class[2], 9);
}

TEST(BuildCorpus, BadFilesAreReportedAndSkipped) {
  ToyFixture fx;
  {
    std::ofstream f(fx.root / "src/spk01/broken.wav");
    f << "not a wav";
  }
  fs::create_directories(fx.root / "src/empty_speaker");
  ::testing::internal::CaptureStderr();
  BuildReport rep = BuildCorpus(fx.root / "src", fx.registry, fx.mel, 3,
                                fx.root / "out");
  const std::string err = ::testing::internal::GetCapturedStderr();
  ASSERT_EQ(rep.errors.size(), 1u);
  EXPECT_NE(rep.errors[0].find("broken.wav"), std::string::npos);
  EXPECT_EQ(rep.manifest.records.size(), 40u);
  EXPECT_EQ(rep.skipped_speakers, std::vector<std::string>{"empty_speaker"});
  EXPECT_NE(err.find("empty_speaker"), std::string::npos);
}

TEST(BuildCorpus, Errors) {
  ToyFixture fx;
  VocoderRegistry one;
  one.Add(MakeBackend(DefaultToyBackends(0)[0], fx.mel));
  EXPECT_THROW(BuildCorpus(fx.root / "src", one, fx.mel, 1, fx.root / "o"),
               ArgumentError);
  EXPECT_THROW(BuildCorpus(fx.root / "missing", fx.registry, fx.mel, 1,
                           fx.root / "o"),
               IoError);
  EXPECT_FALSE(fs::exists(fx.root / "o/manifest.tsv"));
}

TEST(BuildCorpus, SplitKeepsInvariants) {
  ToyFixture fx(8, 4);
  BuildReport rep = BuildCorpus(fx.root / "src", fx.registry, fx.mel, 3,
                                fx.root / "out");
  Manifest m = SplitManifest(rep.manifest, {0.5, 0.25, 0.25}, 3);
  EXPECT_NO_THROW(m.Validate());
  std::map<std::string, std::set<Split>> splits;
  for (const auto &r : m.records) splits[r.speaker_id].insert(r.split);
  for (auto &[spk, s] : splits) EXPECT_EQ(s.size(), 1u) << spk;
  std::map<int, int> train_classes;
  for (const auto *r : m.InSplit(Split::kTrain))
    if (r->label) train_classes[r->vocoder_class]++;
  if (train_classes.size() == 2) {
    EXPECT_LE(std::abs(train_classes[1] - train_classes[2]),
              static_cast<int>(fx.registry.size()));
  }
}

// ----------------------------------------------------------- augmentation

AugmentPolicy PaperPolicy() {
  AugmentPolicy p;
  p.noise = std::make_shared<Waveform>(BabbleNoise(0.5, 8000, 3));
  return p;
}

TEST(AugmentForEval, BranchFrequencies) {
  AugmentPolicy policy = PaperPolicy();
  Waveform w = testing_util::WhiteNoise(64, 8000, 1, 0.2);
  Rng rng(12);
  std::map<AugmentBranch, long> counts;
  const int n = 10000;
  for (int i = 0; i < n; ++i) counts[AugmentForEval(w, policy, rng).branch]++;
  const double expected[3] = {0.4 * n, 0.4 * n, 0.2 * n};
  double chi2 = 0.0;
  int b = 0;
  for (AugmentBranch br :
       {AugmentBranch::kOriginal, AugmentBranch::kResampled, AugmentBranch::kNoisy}) {
    const double d = counts[br] - expected[b];
    chi2 += d * d / expected[b];
    ++b;
  }
  // chi-square, 2 degrees of freedom, 99th percentile.
  EXPECT_LT(chi2, 9.2103);
}

TEST(AugmentForEval, BranchContents) {
  AugmentPolicy policy = PaperPolicy();
  Waveform w = testing_util::WhiteNoise(400, 8000, 2, 0.2);
  Rng rng(13);
  std::set<int> rates;
  std::set<double> snrs;
  for (int i = 0; i < 400; ++i) {
    AugmentResult r = AugmentForEval(w, policy, rng);
    EXPECT_EQ(r.audio.sample_rate, w.sample_rate);
    ASSERT_EQ(r.audio.size(), w.size());
    switch (r.branch) {
      case AugmentBranch::kOriginal:
        EXPECT_EQ(r.audio.samples, w.samples);
        break;
      case AugmentBranch::kResampled:
        rates.insert(static_cast<int>(r.parameter));
        EXPECT_EQ(r.audio.samples,
                  DegradeRoundtrip(w, static_cast<int>(r.parameter)).samples);
        break;
      case AugmentBranch::kNoisy: {
        snrs.insert(r.parameter);
        std::vector<double> added(w.size());
        for (size_t k = 0; k < w.size(); ++k)
          added[k] = r.audio.samples[k] - w.samples[k];
        EXPECT_NEAR(testing_util::Db(MeanPower(w.samples) / MeanPower(added)),
                    r.parameter, 0.1);
        break;
      }
    }
  }
  EXPECT_EQ(rates, (std::set<int>{8000, 16000, 22050, 32000, 44100}));
  EXPECT_EQ(snrs, (std::set<double>{8.0, 10.0, 20.0}));
}

TEST(AugmentForEval, IdentityPolicyAndSeeding) {
  Waveform w = testing_util::WhiteNoise(200, 8000, 3);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    AugmentResult r = AugmentForEval(w, AugmentPolicy::Identity(), rng);
    EXPECT_EQ(r.branch, AugmentBranch::kOriginal);
    EXPECT_EQ(r.audio.samples, w.samples);
  }
  AugmentPolicy policy = PaperPolicy();
  Rng a(5), b(5);
  for (int i = 0; i < 50; ++i)
    EXPECT_EQ(AugmentForEval(w, policy, a).audio.samples,
              AugmentForEval(w, policy, b).audio.samples);
}

TEST(AugmentForEval, PolicyValidation) {
  Waveform w = testing_util::WhiteNoise(200, 8000, 3);
  Rng rng(1);
  AugmentPolicy no_noise;
  EXPECT_THROW(AugmentForEval(w, no_noise, rng), ConfigError);
  AugmentPolicy bad = PaperPolicy();
  bad.p_original = 0.5;
  EXPECT_THROW(bad.Validate(), ArgumentError);
  bad = PaperPolicy();
  bad.intermediate_rates.clear();
  EXPECT_THROW(bad.Validate(), ArgumentError);
  EXPECT_EQ(BranchName(AugmentBranch::kNoisy), "noisy");
}

TEST(StableHash, KnownValue) {
  // FNV-1a 64-bit reference values.
  EXPECT_EQ(StableHash(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(StableHash("a"), 0xaf63dc4c8601ec8cULL);
}

}  // namespace
}  // namespace vocart
