// include/vocart/audio.h

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

#ifndef VOCART_AUDIO_H_
#define VOCART_AUDIO_H_

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "vocart/rng.h"

namespace vocart {

/// Mono time-domain signal. Amplitudes are nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;

  Waveform() = default;
  Waveform(std::vector<double> s, int rate)
      : samples(std::move(s)), sample_rate(rate) {}

  size_t size() const { return samples.size(); }
  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
  /// Throws ArgumentError unless sample_rate > 0 and all samples are finite.
  void Validate() const;
};

/// Analysis settings shared by the mel front end and every vocoder backend.
/// The defaults are the usual neural-vocoder settings at 24 kHz.
struct MelParams {
  int sample_rate = 24000;
  int n_fft = 1024;
  int hop_length = 256;
  int win_length = 1024;
  int n_mels = 80;
  double fmin = 0.0;
  double fmax = 12000.0;
  double log_floor = std::log(1e-5);

  void Validate() const;
  bool operator==(const MelParams &) const = default;
};

enum class StftPadding {
  kReflect,  // reflect-pad n_fft/2 on both sides; n_frames = 1 + len / hop
  kNone,     // frames fully inside the signal; n_frames = 1 + (len - n_fft) / hop
};

/// Natural-log mel power spectrogram, stored frame-major.
struct MelSpectrogram {
  MelParams params;
  size_t n_frames = 0;
  std::vector<double> values;  // n_frames * params.n_mels

  size_t n_mels() const { return static_cast<size_t>(params.n_mels); }
  double at(size_t frame, size_t mel) const {
    return values[frame * n_mels() + mel];
  }
  double &at(size_t frame, size_t mel) { return values[frame * n_mels() + mel]; }
  std::span<const double> frame(size_t t) const {
    return {values.data() + t * n_mels(), n_mels()};
  }
};

enum class PcmFormat { kPcm16, kFloat32 };

/// Reads a PCM16 or float32 WAV file. Multi-channel input is averaged down to
/// mono. PCM16 is scaled by 1/32768.
Waveform LoadAudio(const std::filesystem::path &path);

/// Writes a mono WAV. Samples outside [-1, 1] are saturated with a warning.
void SaveAudio(const Waveform &w, const std::filesystem::path &path,
               PcmFormat format = PcmFormat::kPcm16);

struct ResampleOptions {
  double kaiser_beta = 8.6;
  int zero_crossings = 64;
  /// Cutoff as a fraction of the lower of the two Nyquist frequencies.
  double rolloff = 0.99;
};

/// Band-limited rate conversion by polyphase Kaiser-windowed sinc
/// interpolation. Output length is round(len * target / source).
Waveform Resample(const Waveform &w, int target_rate,
                  const ResampleOptions &opts = {});

/// Resamples to `intermediate_rate` and back. The output has exactly the
/// input's length and rate.
Waveform DegradeRoundtrip(const Waveform &w, int intermediate_rate,
                          const ResampleOptions &opts = {});

double MeanPower(std::span<const double> x);

/// Returns clean + alpha * noise, alpha chosen so that the clean-to-scaled-noise
/// power ratio is exactly snr_db. The noise is read cyclically starting at
/// `noise_offset` to cover the clean length.
Waveform MixNoiseAtSnr(const Waveform &clean, const Waveform &noise,
                       double snr_db, size_t noise_offset = 0);

/// log(max(mel_filterbank * |STFT|^2, exp(log_floor))) with a periodic Hann
/// window of win_length centred inside each n_fft frame.
MelSpectrogram ComputeMelSpectrogram(const Waveform &w, const MelParams &p,
                                     StftPadding padding = StftPadding::kReflect);

enum class FixMode { kCropRandom, kCropCenter, kTile };

/// Returns exactly n samples. Signals shorter than n are always tiled; longer
/// ones are cropped according to `mode` (kTile keeps the head). kCropRandom
/// draws the offset from `rng`, which must then be non-null.
Waveform FixLength(const Waveform &w, size_t n, FixMode mode,
                   Rng *rng = nullptr);

}  // namespace vocart

#endif  // VOCART_AUDIO_H_
