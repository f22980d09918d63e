// include/vocart/stft.h

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

#ifndef VOCART_STFT_H_
#define VOCART_STFT_H_

#include <span>
#include <vector>

#include "vocart/audio.h"
#include "vocart/fft.h"

namespace vocart {

/// Frame-major complex spectrogram, frames x (n_fft/2 + 1).
struct ComplexSpectrogram {
  size_t n_frames = 0;
  size_t n_bins = 0;
  std::vector<Complex> data;

  Complex *frame(size_t t) { return data.data() + t * n_bins; }
  const Complex *frame(size_t t) const { return data.data() + t * n_bins; }
};

class Stft {
 public:
  Stft(int n_fft, int hop_length, int win_length);
  explicit Stft(const MelParams &p)
      : Stft(p.n_fft, p.hop_length, p.win_length) {}

  size_t n_fft() const { return n_fft_; }
  size_t hop() const { return hop_; }
  size_t n_bins() const { return n_fft_ / 2 + 1; }
  /// Periodic Hann of win_length, zero-padded and centred to n_fft.
  const std::vector<double> &window() const { return window_; }

  size_t NumFrames(size_t length, StftPadding padding) const;

  ComplexSpectrogram Forward(std::span<const double> x,
                             StftPadding padding = StftPadding::kReflect) const;

  /// Weighted overlap-add inverse of a reflect-padded Forward. Returns
  /// `length` samples.
  std::vector<double> Inverse(const ComplexSpectrogram &spec,
                              size_t length) const;

 private:
  size_t n_fft_, hop_, win_;
  Fft fft_;
  std::vector<double> window_;
};

double HzToMel(double hz);
double MelToHz(double mel);

/// Triangular HTK-scale filters, row-major n_mels x (n_fft/2 + 1), unit peak.
std::vector<double> MelFilterbank(const MelParams &p);
/// Centre frequency (Hz) of each mel filter.
std::vector<double> MelCenterFrequencies(const MelParams &p);

}  // namespace vocart

#endif  // VOCART_STFT_H_
