// tests/toy_test.cc

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

#include <cmath>

#include "test_util.h"
#include "vocart/errors.h"
#include "vocart/toy.h"

namespace vocart {
namespace {

using testing_util::TempDir;

TEST(ToyVoice, RandomVoiceRanges) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    ToyVoice v = RandomVoice(rng);
    EXPECT_GE(v.f0, 90.0);
    EXPECT_LT(v.f0, 240.0);
    EXPECT_LT(v.formants[0], v.formants[1]);
    EXPECT_LT(v.formants[1], v.formants[2]);
    EXPECT_GT(v.breath, 0.0);
  }
}

TEST(SynthesizeUtterance, LengthPeakAndDeterminism) {
  Rng a(3), b(3);
  ToyVoice va = RandomVoice(a), vb = RandomVoice(b);
  Waveform x = SynthesizeUtterance(va, 0.8, 16000, a);
  Waveform y = SynthesizeUtterance(vb, 0.8, 16000, b);
  EXPECT_EQ(x.samples, y.samples);
  EXPECT_EQ(x.size(), 12800u);
  EXPECT_EQ(x.sample_rate, 16000);
  double peak = 0.0;
  for (double v : x.samples) peak = std::max(peak, std::abs(v));
  EXPECT_NEAR(peak, 0.5, 1e-12);
  EXPECT_THROW(SynthesizeUtterance(va, 0.0, 16000, a), ArgumentError);
}

TEST(SynthesizeUtterance, EnergySitsNearTheVoice) {
  Rng rng(4);
  ToyVoice v;
  v.f0 = 150.0;
  Waveform w = SynthesizeUtterance(v, 0.5, 24000, rng);
  // Harmonics stop at 9 kHz; above that there is only breath noise.
  const double low = testing_util::BandEnergy(w.samples, 24000, 50, 4000);
  const double high = testing_util::BandEnergy(w.samples, 24000, 10000, 12000);
  EXPECT_GT(testing_util::Db(low / high), 30.0);
  // Nothing much below the lowest possible pitch.
  const double sub = testing_util::BandEnergy(w.samples, 24000, 1, 100);
  EXPECT_GT(testing_util::Db(low / sub), 20.0);
}

TEST(BabbleNoise, RmsAndSeed) {
  Waveform n = BabbleNoise(1.0, 16000, 5);
  EXPECT_EQ(n.size(), 16000u);
  EXPECT_NEAR(std::sqrt(MeanPower(n.samples)), 0.1, 1e-12);
  EXPECT_EQ(BabbleNoise(1.0, 16000, 5).samples, n.samples);
  EXPECT_NE(BabbleNoise(1.0, 16000, 6).samples, n.samples);
  EXPECT_THROW(BabbleNoise(1.0, 16000, 5, 0), ArgumentError);
}

TEST(WriteToyCorpus, LayoutAndDeterminism) {
  TempDir a("toya"), b("toyb");
  ToyCorpusOptions o;
  o.speakers = 3;
  o.utterances_per_speaker = 4;
  o.min_seconds = 0.2;
  o.max_seconds = 0.3;
  o.seed = 9;
  auto files = WriteToyCorpus(a.path(), o);
  auto again = WriteToyCorpus(b.path(), o);
  ASSERT_EQ(files.size(), 12u);
  EXPECT_EQ(files[0], a.path() / "spk00" / "utt000.wav");
  EXPECT_EQ(files[11], a.path() / "spk02" / "utt003.wav");
  for (size_t i = 0; i < files.size(); ++i) {
    EXPECT_EQ(testing_util::ReadFile(files[i]), testing_util::ReadFile(again[i]));
    Waveform w = LoadAudio(files[i]);
    EXPECT_EQ(w.sample_rate, 24000);
    EXPECT_GE(w.duration(), 0.2 - 1e-3);
    EXPECT_LE(w.duration(), 0.3 + 1e-3);
  }
  o.speakers = 0;
  EXPECT_THROW(WriteToyCorpus(a.path(), o), ArgumentError);
}

TEST(DefaultToyBackends, TwoDistinctSignatures) {
  auto specs = DefaultToyBackends(3);
  ASSERT_EQ(specs.size(), 2u);
  EXPECT_EQ(specs[0].type, BackendSpec::Type::kToy);
  EXPECT_EQ(specs[0].name, "toy-comb");
  EXPECT_EQ(specs[1].name, "toy-quant");
  EXPECT_NE(specs[0].signature, specs[1].signature);
  EXPECT_EQ(specs[0].seed, 3u);
}

}  // namespace
}  // namespace vocart
