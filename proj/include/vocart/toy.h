// include/vocart/toy.h

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

#ifndef VOCART_TOY_H_
#define VOCART_TOY_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vocart/audio.h"
#include "vocart/rng.h"
#include "vocart/vocoder.h"

namespace vocart {

/// Pseudo-speaker: a glottal pitch range and three formant resonances.
struct ToyVoice {
  double f0 = 120.0;                    // Hz
  double formants[3] = {500, 1500, 2500};  // Hz
  double bandwidths[3] = {90, 120, 160};   // Hz
  double breath = 0.01;                 // relative level of aspiration noise
};

ToyVoice RandomVoice(Rng &rng);

/// Harmonic source shaped by the voice's formants, cut into syllables with
/// per-syllable pitch and formant drift and a raised-cosine amplitude
/// envelope. Peak-normalised to 0.5.
Waveform SynthesizeUtterance(const ToyVoice &voice, double seconds,
                             int sample_rate, Rng &rng);

/// Sum of several unrelated pseudo-speakers, RMS-normalised.
Waveform BabbleNoise(double seconds, int sample_rate, uint64_t seed,
                     int talkers = 6);

struct ToyCorpusOptions {
  int speakers = 4;
  int utterances_per_speaker = 10;
  double min_seconds = 0.9;
  double max_seconds = 1.3;
  int sample_rate = 24000;
  uint64_t seed = 0;
};

/// Writes <dir>/spkNN/uttNNN.wav (PCM16). Returns the written files in order.
std::vector<std::filesystem::path> WriteToyCorpus(
    const std::filesystem::path &dir, const ToyCorpusOptions &opts);

/// The desk-scale backend pair: Griffin-Lim followed by a comb signature and
/// Griffin-Lim followed by coarse quantisation.
std::vector<BackendSpec> DefaultToyBackends(uint64_t seed = 0);

}  // namespace vocart

#endif  // VOCART_TOY_H_
