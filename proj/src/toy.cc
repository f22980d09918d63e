// src/toy.cc

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

#include "vocart/toy.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "vocart/errors.h"

namespace vocart {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMaxHarmonicHz = 9000.0;

double FormantGain(const ToyVoice &v, const double *shift, double f) {
  double g = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double d = (f - v.formants[i] * shift[i]) / v.bandwidths[i];
    g += 1.0 / (1.0 + d * d) / (i + 1.0);
  }
  // gentle spectral tilt so the upper harmonics do not vanish entirely
  return g + 0.02 * 1000.0 / (f + 1000.0);
}

}  // namespace

ToyVoice RandomVoice(Rng &rng) {
  ToyVoice v;
  v.f0 = rng.Uniform(90.0, 240.0);
  v.formants[0] = rng.Uniform(300.0, 900.0);
  v.formants[1] = rng.Uniform(1000.0, 2300.0);
  v.formants[2] = rng.Uniform(2400.0, 3400.0);
  v.bandwidths[0] = rng.Uniform(60.0, 120.0);
  v.bandwidths[1] = rng.Uniform(90.0, 160.0);
  v.bandwidths[2] = rng.Uniform(120.0, 220.0);
  v.breath = rng.Uniform(0.005, 0.03);
  return v;
}

Waveform SynthesizeUtterance(const ToyVoice &voice, double seconds,
                             int sample_rate, Rng &rng) {
  if (sample_rate <= 0 || !(seconds > 0))
    throw ArgumentError("toy utterance needs a positive rate and duration");
  const size_t n = static_cast<size_t>(std::lround(seconds * sample_rate));
  std::vector<double> out(n, 0.0);
  const double nyq_cap = std::min(kMaxHarmonicHz, 0.45 * sample_rate);

  size_t pos = 0;
  double phase = 0.0;
  while (pos < n) {
    const size_t len = std::min(
        n - pos, static_cast<size_t>(rng.Uniform(0.12, 0.30) * sample_rate));
    const size_t gap = static_cast<size_t>(rng.Uniform(0.0, 0.05) * sample_rate);
    const double f_start = voice.f0 * rng.Uniform(0.85, 1.15);
    const double f_end = f_start * rng.Uniform(0.9, 1.1);
    double shift[3];
    for (double &s : shift) s = rng.Uniform(0.85, 1.15);
    const int harmonics =
        std::max(1, static_cast<int>(nyq_cap / std::max(f_start, f_end)));
    std::vector<double> amp(harmonics), ph0(harmonics);
    for (int k = 0; k < harmonics; ++k) {
      amp[k] = FormantGain(voice, shift, (k + 1) * 0.5 * (f_start + f_end));
      ph0[k] = rng.Uniform(0.0, kTwoPi);
    }
    const double breath = voice.breath;
    for (size_t i = 0; i < len; ++i) {
      const double u = static_cast<double>(i) / std::max<size_t>(len - 1, 1);
      const double f0 = f_start + (f_end - f_start) * u;
      phase = std::fmod(phase + kTwoPi * f0 / sample_rate, kTwoPi);
      double s = 0.0;
      for (int k = 0; k < harmonics; ++k)
        s += amp[k] * std::sin((k + 1) * phase + ph0[k]);
      s += breath * rng.Normal();
      const double env = 0.5 - 0.5 * std::cos(kTwoPi * u);
      out[pos + i] = env * s;
    }
    pos += len;
    for (size_t i = 0; i < gap && pos < n; ++i, ++pos)
      out[pos] = 0.1 * breath * rng.Normal();
  }
  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  if (peak > 0)
    for (double &v : out) v *= 0.5 / peak;
  return Waveform(std::move(out), sample_rate);
}

Waveform BabbleNoise(double seconds, int sample_rate, uint64_t seed,
                     int talkers) {
  if (talkers < 1) throw ArgumentError("babble needs at least one talker");
  Rng rng(MixSeed(seed, 0xbabb1e));
  const size_t n = static_cast<size_t>(std::lround(seconds * sample_rate));
  std::vector<double> mix(n, 0.0);
  for (int t = 0; t < talkers; ++t) {
    const ToyVoice v = RandomVoice(rng);
    const Waveform w = SynthesizeUtterance(v, seconds, sample_rate, rng);
    for (size_t i = 0; i < n; ++i) mix[i] += w.samples[i];
  }
  const double rms = std::sqrt(MeanPower(mix));
  if (rms > 0)
    for (double &v : mix) v *= 0.1 / rms;
  return Waveform(std::move(mix), sample_rate);
}

std::vector<std::filesystem::path> WriteToyCorpus(
    const std::filesystem::path &dir, const ToyCorpusOptions &opts) {
  if (opts.speakers < 1 || opts.utterances_per_speaker < 1)
    throw ArgumentError("toy corpus needs speakers and utterances");
  if (!(opts.min_seconds > 0) || opts.max_seconds < opts.min_seconds)
    throw ArgumentError("bad toy utterance duration range");
  std::vector<std::filesystem::path> files;
  Rng master(opts.seed);
  for (int s = 0; s < opts.speakers; ++s) {
    char spk[32];
    std::snprintf(spk, sizeof(spk), "spk%02d", s);
    Rng rng = master.Fork(static_cast<uint64_t>(s));
    const ToyVoice voice = RandomVoice(rng);
    const std::filesystem::path sdir = dir / spk;
    std::error_code ec;
    std::filesystem::create_directories(sdir, ec);
    if (ec) throw IoError("cannot create " + sdir.string() + ": " + ec.message());
    for (int u = 0; u < opts.utterances_per_speaker; ++u) {
      char stem[32];
      std::snprintf(stem, sizeof(stem), "utt%03d.wav", u);
      const double secs = rng.Uniform(opts.min_seconds, opts.max_seconds);
      const Waveform w = SynthesizeUtterance(voice, secs, opts.sample_rate, rng);
      files.push_back(sdir / stem);
      SaveAudio(w, files.back());
    }
  }
  return files;
}

std::vector<BackendSpec> DefaultToyBackends(uint64_t seed) {
  BackendSpec comb;
  comb.type = BackendSpec::Type::kToy;
  comb.name = "toy-comb";
  comb.signature = Signature::Comb(8, 0.5);
  comb.seed = seed;
  BackendSpec quant;
  quant.type = BackendSpec::Type::kToy;
  quant.name = "toy-quant";
  quant.signature = Signature::Quantize(6);
  quant.seed = seed;
  return {comb, quant};
}

}  // namespace vocart
