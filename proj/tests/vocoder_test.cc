// tests/vocoder_test.cc

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

#include <sys/stat.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "test_util.h"
#include "vocart/errors.h"
#include "vocart/fft.h"
#include "vocart/toy.h"
#include "vocart/vocoder.h"

namespace vocart {
namespace {

using testing_util::BandEnergy;
using testing_util::Db;
using testing_util::TempDir;
using testing_util::WhiteNoise;

double Rms(const std::vector<double> &x) { return std::sqrt(MeanPower(x)); }

Waveform Speech(uint64_t seed, double seconds = 0.6, int rate = 24000) {
  Rng rng(seed);
  ToyVoice v = RandomVoice(rng);
  return SynthesizeUtterance(v, seconds, rate, rng);
}

std::vector<std::shared_ptr<const VocoderBackend>> AllInProcessBackends(
    const MelParams &p) {
  return {std::make_shared<GriffinLimBackend>("gl", p, 32),
          std::make_shared<ToyArtifactBackend>("comb", p, Signature::Comb(8)),
          std::make_shared<ToyArtifactBackend>("notch", p,
                                               Signature::Notch(3000, 5)),
          std::make_shared<ToyArtifactBackend>("quant", p, Signature::Quantize(6))};
}

// ------------------------------------------------------------ Griffin-Lim

TEST(GriffinLim, SineKeepsItsPitch) {
  MelParams p;
  Waveform w = testing_util::Sine(440, 0.5, 24000);
  GriffinLimBackend gl("gl", p, 32);
  Waveform v = SelfVocode(w, p, gl);
  // Periodogram averaged over interior n_fft frames; one bin is the
  // vocoder's own analysis resolution.
  const size_t n = static_cast<size_t>(p.n_fft);
  std::vector<double> avg(n / 2 + 1, 0.0);
  for (size_t start = 2048; start + n + 2048 <= v.size(); start += n / 2) {
    std::vector<double> seg(v.samples.begin() + start, v.samples.begin() + start + n);
    const std::vector<double> pw = testing_util::NaivePowerSpectrum(seg);
    for (size_t k = 0; k < pw.size(); ++k) avg[k] += pw[k];
  }
  const double bin_hz = 24000.0 / n;
  EXPECT_NEAR(testing_util::ArgMax(avg) * bin_hz, 440.0, bin_hz);
}

TEST(GriffinLim, SilenceStaysSilent) {
  MelParams p;
  Waveform w(std::vector<double>(12000, 0.0), 24000);
  for (const auto &b : AllInProcessBackends(p)) {
    Waveform v = SelfVocode(w, p, *b);
    EXPECT_LT(Rms(v.samples), 1e-3) << b->name();
  }
}

TEST(GriffinLim, MoreIterationsFitTheMelBetter) {
  MelParams p;
  Waveform w = Speech(3);
  MelSpectrogram m = ComputeMelSpectrogram(w, p);
  auto err = [&](int iters) {
    GriffinLimBackend gl("gl", p, iters, 1);
    Waveform v = gl.Vocode(m);
    v.samples.resize(w.size(), 0.0);
    MelSpectrogram mv = ComputeMelSpectrogram(v, p);
    double acc = 0.0;
    size_t n = std::min(mv.values.size(), m.values.size());
    for (size_t i = 0; i < n; ++i) acc += std::abs(mv.values[i] - m.values[i]);
    return acc / n;
  };
  EXPECT_LE(err(32), err(1));
}

TEST(GriffinLim, Deterministic) {
  MelParams p;
  Waveform w = Speech(4, 0.3);
  GriffinLimBackend a("gl", p, 8, 7), b("gl", p, 8, 7);
  EXPECT_EQ(SelfVocode(w, p, a).samples, SelfVocode(w, p, b).samples);
  EXPECT_EQ(SelfVocode(w, p, a).samples, SelfVocode(w, p, a).samples);
}

TEST(GriffinLim, ClampedPseudoInverseIsNonNegative) {
  MelParams p;
  GriffinLimBackend gl("gl", p, 1);
  MelSpectrogram m = ComputeMelSpectrogram(Speech(5, 0.2), p);
  for (double v : gl.InvertMel(m)) EXPECT_GE(v, 0.0);
  MelParams other = p;
  other.n_mels = 64;
  EXPECT_THROW(gl.InvertMel(ComputeMelSpectrogram(Speech(5, 0.2), other)),
               BackendError);
  EXPECT_THROW(GriffinLimBackend("gl", p, 0), ArgumentError);
}

TEST(SelfVocode, RateAndLengthPreserved) {
  MelParams p;
  for (size_t len : {5000u, 12345u, 24000u}) {
    Waveform w = WhiteNoise(len, 24000, len, 0.1);
    for (const auto &b : AllInProcessBackends(p)) {
      Waveform raw = b->SelfVocode(w, p);
      EXPECT_EQ(raw.sample_rate, 24000);
      EXPECT_LE(std::abs(static_cast<long>(raw.size()) - static_cast<long>(len)),
                p.hop_length)
          << b->name();
      EXPECT_EQ(SelfVocode(w, p, *b).size(), len);
    }
  }
}

TEST(SelfVocode, ResidualIsVisibleOnSpeech) {
  MelParams p;
  Waveform w = Speech(6);
  GriffinLimBackend gl("gl", p, 32);
  Waveform v = SelfVocode(w, p, gl);
  EXPECT_GT(SpectrogramDifference(w, v, p).MeanAbs(), 0.0);
}

// ------------------------------------------------------------- signatures

TEST(Signature, QuantiserLevelCount) {
  Waveform w = WhiteNoise(20000, 24000, 1, 0.5);
  Waveform q = ApplySignature(w, Signature::Quantize(8));
  std::set<double> values(q.samples.begin(), q.samples.end());
  EXPECT_LE(values.size(), 256u);
  EXPECT_GT(values.size(), 100u);
}

TEST(Signature, CombRippleFollowsDelay) {
  const int rate = 24000, d = 8;
  Waveform w = WhiteNoise(4096, rate, 2);
  Waveform c = ApplySignature(w, Signature::Comb(d, 0.5));
  // Peaks at multiples of rate/d, nulls halfway between. Compare the
  // filtered/unfiltered band ratio at each to the analytic response.
  const double period = static_cast<double>(rate) / d;
  for (int k = 0; k + 1 < d / 2; ++k) {
    const double peak = k * period + (k == 0 ? 100.0 : 0.0);
    const double null = (k + 0.5) * period;
    const double g_peak = Db(BandEnergy(c.samples, rate, peak - 100, peak + 100) /
                             BandEnergy(w.samples, rate, peak - 100, peak + 100));
    const double g_null = Db(BandEnergy(c.samples, rate, null - 100, null + 100) /
                             BandEnergy(w.samples, rate, null - 100, null + 100));
    EXPECT_GT(g_peak, -1.5) << "peak " << peak;
    EXPECT_LT(g_null, -6.0) << "null " << null;
  }
}

TEST(Signature, NotchRemovesItsBand) {
  const int rate = 24000;
  Waveform w = WhiteNoise(4096, rate, 3);
  Waveform n = ApplySignature(w, Signature::Notch(3000, 5));
  const double drop = Db(BandEnergy(w.samples, rate, 2900, 3100) /
                         BandEnergy(n.samples, rate, 2900, 3100));
  EXPECT_GE(drop, 10.0);
  const double far = Db(BandEnergy(w.samples, rate, 8000, 10000) /
                        BandEnergy(n.samples, rate, 8000, 10000));
  EXPECT_LT(std::abs(far), 1.0);
}

TEST(Signature, Validation) {
  EXPECT_THROW(Signature::Comb(0).Validate(24000), ArgumentError);
  EXPECT_THROW(Signature::Comb(4, 0.0).Validate(24000), ArgumentError);
  EXPECT_THROW(Signature::Notch(12000, 5).Validate(24000), ArgumentError);
  EXPECT_THROW(Signature::Notch(0, 5).Validate(24000), ArgumentError);
  EXPECT_THROW(Signature::Notch(3000, 0).Validate(24000), ArgumentError);
  EXPECT_THROW(Signature::Quantize(1).Validate(24000), ArgumentError);
  EXPECT_THROW(Signature::Quantize(13).Validate(24000), ArgumentError);
  EXPECT_NO_THROW(Signature::Quantize(12).Validate(24000));
  MelParams p;
  EXPECT_THROW(ToyArtifactBackend("bad", p, Signature::Comb(0)), ArgumentError);
  EXPECT_EQ(Signature::Comb(8).Tag(), "comb-d8");
}

// Welch periodogram over 1024-sample Hann segments (23.4 Hz bins at 24 kHz).
std::vector<double> Welch1024(const std::vector<double> &x) {
  const size_t n = 1024;
  Fft fft(n);
  std::vector<double> acc(n / 2 + 1, 0.0);
  for (size_t start = 0; start + n <= x.size(); start += n / 4) {
    std::vector<double> seg(n);
    for (size_t i = 0; i < n; ++i)
      seg[i] = x[start + i] * (0.5 - 0.5 * std::cos(2 * std::numbers::pi * i / n));
    const std::vector<Complex> spec = fft.RealForward(seg);
    for (size_t k = 0; k < acc.size(); ++k) acc[k] += std::norm(spec[k]);
  }
  return acc;
}

double MeanLog(const std::vector<double> &pw, int lo, int hi) {
  double s = 0.0;
  for (int k = lo; k <= hi; ++k) s += std::log(pw[k] + 1e-30);
  return s / (hi - lo + 1);
}

// Each signature's designed statistic, thresholded, tells its backend's
// output apart from plain Griffin-Lim output of the same clips.
TEST(Signature, DesignedStatisticsSeparateBackends) {
  MelParams p;
  GriffinLimBackend gl("gl", p, 32);
  const Signature comb = Signature::Comb(8), notch = Signature::Notch(3000, 5),
                  quant = Signature::Quantize(6);
  // Comb nulls at 4.5, 7.5 and 10.5 kHz sit between peaks at multiples of
  // 3 kHz. The notch at 3 kHz (bin 128) against bands 190-280 Hz away.
  // Mel inversion leaves its own ripple, hence the offset comb threshold.
  auto comb_stat = [](const std::vector<double> &pw) {
    double s = 0.0;
    for (int null : {192, 320, 448})
      s += MeanLog(pw, null - 3, null + 3) -
           0.5 * (MeanLog(pw, null - 67, null - 61) + MeanLog(pw, null + 61, null + 67));
    return s / 3.0;
  };
  auto notch_stat = [](const std::vector<double> &pw) {
    return MeanLog(pw, 127, 129) -
           0.5 * (MeanLog(pw, 117, 120) + MeanLog(pw, 136, 139));
  };
  auto levels = [](const std::vector<double> &x) {
    return std::set<double>(x.begin(), x.end()).size();
  };
  int ok_comb = 0, ok_notch = 0, ok_quant = 0;
  const int n = 100;
  for (int i = 0; i < n; ++i) {
    Waveform w = Speech(1000 + i, 0.25);
    Waveform base = gl.SelfVocode(w, p);
    Waveform c = ApplySignature(base, comb), t = ApplySignature(base, notch),
             q = ApplySignature(base, quant);
    const std::vector<double> pb = Welch1024(base.samples);
    ok_comb += (comb_stat(Welch1024(c.samples)) < 3.5) + (comb_stat(pb) >= 3.5);
    ok_notch += (notch_stat(Welch1024(t.samples)) < -2.0) + (notch_stat(pb) >= -2.0);
    ok_quant += (levels(q.samples) <= 64) + (levels(base.samples) > 64);
  }
  EXPECT_GE(ok_comb / (2.0 * n), 0.95);
  EXPECT_GE(ok_notch / (2.0 * n), 0.95);
  EXPECT_GE(ok_quant / (2.0 * n), 0.95);
}

TEST(Signature, ToyBackendIsGriffinLimThenSignature) {
  MelParams p;
  Waveform w = Speech(8, 0.3);
  GriffinLimBackend gl("gl", p, 32, 0);
  ToyArtifactBackend toy("toy", p, Signature::Comb(8), 32, 0);
  EXPECT_EQ(toy.SelfVocode(w, p).samples,
            ApplySignature(gl.SelfVocode(w, p), Signature::Comb(8)).samples);
}

// --------------------------------------------------------------- residual

TEST(SpectrogramDifference, IdentityAndAntisymmetry) {
  MelParams p;
  Waveform w = Speech(7, 0.4);
  MelResidual zero = SpectrogramDifference(w, w, p);
  for (double v : zero.values) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(zero.MeanAbs(), 0.0);
  GriffinLimBackend gl("gl", p, 16);
  Waveform v = SelfVocode(w, p, gl);
  MelResidual a = SpectrogramDifference(w, v, p), b = SpectrogramDifference(v, w, p);
  ASSERT_EQ(a.values.size(), b.values.size());
  for (size_t i = 0; i < a.values.size(); ++i) EXPECT_EQ(a.values[i], -b.values[i]);
  Waveform other = WhiteNoise(9000, 16000, 1);
  EXPECT_THROW(SpectrogramDifference(w, other, p), ArgumentError);
}

TEST(SpectrogramDifference, TrimsToShorter) {
  MelParams p;
  Waveform w = WhiteNoise(12000, 24000, 2);
  Waveform shorter(std::vector<double>(w.samples.begin(), w.samples.begin() + 11000),
                   24000);
  MelResidual r = SpectrogramDifference(w, shorter, p);
  EXPECT_EQ(r.n_frames, 1u + 11000 / 256);
  EXPECT_EQ(r.n_mels, 80u);
}

// --------------------------------------------------------------- external

TEST(ExternalBackend, RunsTheProgram) {
  TempDir dir;
  const auto script = dir / "copy.sh";
  {
    std::ofstream f(script);
    f << "#!/bin/sh\ncp \"$1\" \"$2\"\n";
  }
  ::chmod(script.c_str(), 0755);
  MelParams p;
  BackendSpec spec;
  spec.type = BackendSpec::Type::kExternal;
  spec.name = "ext";
  spec.command = script.string();
  auto b = MakeBackend(spec, p);
  Waveform w = WhiteNoise(3000, 24000, 3, 0.1);
  Waveform v = SelfVocode(w, p, *b);
  ASSERT_EQ(v.size(), w.size());
  for (size_t i = 0; i < w.size(); ++i)
    EXPECT_EQ(v.samples[i], static_cast<double>(static_cast<float>(w.samples[i])));
  EXPECT_THROW(b->Vocode(ComputeMelSpectrogram(w, p)), BackendError);
}

TEST(ExternalBackend, FailureNamesTheBackend) {
  MelParams p;
  ExternalCommandBackend fails("broken", "false");
  Waveform w = WhiteNoise(3000, 24000, 3);
  try {
    SelfVocode(w, p, fails);
    FAIL() << "expected BackendError";
  } catch (const BackendError &e) {
    EXPECT_EQ(e.backend(), "broken");
  }
  ExternalCommandBackend missing("nope", "/definitely/not/a/program");
  EXPECT_THROW(SelfVocode(w, p, missing), BackendError);
  EXPECT_THROW(ExternalCommandBackend("empty", "   "), ArgumentError);
}

// --------------------------------------------------------------- registry

TEST(Registry, ContiguousIdsAndLookups) {
  MelParams p;
  VocoderRegistry reg;
  EXPECT_EQ(reg.Add(std::make_shared<GriffinLimBackend>("a", p, 1)), 1);
  EXPECT_THROW(reg.RequireMultiClass(), ArgumentError);
  EXPECT_EQ(reg.Add(std::make_shared<GriffinLimBackend>("b", p, 1)), 2);
  EXPECT_NO_THROW(reg.RequireMultiClass());
  EXPECT_EQ(reg.num_classes(), 3);
  EXPECT_EQ(reg.ClassOf("b"), 2);
  EXPECT_EQ(reg.backend(1).name(), "a");
  EXPECT_THROW(reg.backend(0), ArgumentError);
  EXPECT_THROW(reg.backend(3), ArgumentError);
  EXPECT_THROW(reg.ClassOf("c"), ArgumentError);
  EXPECT_THROW(reg.Add(std::make_shared<GriffinLimBackend>("a", p, 1)),
               ArgumentError);
  RegistrySnapshot snap = reg.Snapshot();
  ASSERT_EQ(snap.size(), 2u);
  EXPECT_EQ(snap[0], (RegistryEntry{1, "a"}));
  EXPECT_EQ(snap[1], (RegistryEntry{2, "b"}));
  EXPECT_NO_THROW(ValidateSnapshot(snap));
  EXPECT_THROW(ValidateSnapshot({{2, "a"}}), ArgumentError);
  EXPECT_THROW(ValidateSnapshot({{1, "a"}, {2, "a"}}), ArgumentError);
}

TEST(Registry, FromSpecsKeepsOrder) {
  MelParams p;
  VocoderRegistry reg = VocoderRegistry::FromSpecs(DefaultToyBackends(0), p);
  EXPECT_EQ(reg.Snapshot(),
            (RegistrySnapshot{{1, "toy-comb"}, {2, "toy-quant"}}));
  BackendSpec unnamed;
  EXPECT_THROW(MakeBackend(unnamed, p), ArgumentError);
}

}  // namespace
}  // namespace vocart
