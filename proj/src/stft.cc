// src/stft.cc

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

#include "vocart/stft.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vocart/errors.h"

namespace vocart {

namespace {

// Index into x extended by repeated reflection (numpy "reflect" mode).
size_t ReflectIndex(long i, long n) {
  if (n == 1) return 0;
  const long period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  if (i >= n) i = period - i;
  return static_cast<size_t>(i);
}

}  // namespace

Stft::Stft(int n_fft, int hop_length, int win_length)
    : n_fft_(static_cast<size_t>(n_fft)),
      hop_(static_cast<size_t>(hop_length)),
      win_(static_cast<size_t>(win_length)),
      fft_(static_cast<size_t>(n_fft)) {
  if (hop_length <= 0 || win_length <= 0 || win_length > n_fft)
    throw ArgumentError("STFT requires 0 < hop, 0 < win_length <= n_fft");
  window_.assign(n_fft_, 0.0);
  const size_t offset = (n_fft_ - win_) / 2;
  for (size_t i = 0; i < win_; ++i)
    window_[offset + i] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                             static_cast<double>(win_));
}

size_t Stft::NumFrames(size_t length, StftPadding padding) const {
  if (padding == StftPadding::kReflect) return 1 + length / hop_;
  if (length < n_fft_) return 0;
  return 1 + (length - n_fft_) / hop_;
}

ComplexSpectrogram Stft::Forward(std::span<const double> x,
                                 StftPadding padding) const {
  if (x.empty()) throw ArgumentError("STFT of an empty signal");
  ComplexSpectrogram spec;
  spec.n_frames = NumFrames(x.size(), padding);
  spec.n_bins = n_bins();
  spec.data.resize(spec.n_frames * spec.n_bins);
  const long pad = padding == StftPadding::kReflect
                       ? static_cast<long>(n_fft_ / 2)
                       : 0;
  const long n = static_cast<long>(x.size());
  std::vector<double> buf(n_fft_);
  for (size_t t = 0; t < spec.n_frames; ++t) {
    const long start = static_cast<long>(t * hop_) - pad;
    for (size_t i = 0; i < n_fft_; ++i) {
      const long idx = start + static_cast<long>(i);
      const double v = (idx >= 0 && idx < n) ? x[static_cast<size_t>(idx)]
                                             : x[ReflectIndex(idx, n)];
      buf[i] = v * window_[i];
    }
    const std::vector<Complex> bins = fft_.RealForward(buf);
    std::copy_n(bins.begin(), spec.n_bins, spec.frame(t));
  }
  return spec;
}

std::vector<double> Stft::Inverse(const ComplexSpectrogram &spec,
                                  size_t length) const {
  if (spec.n_bins != n_bins()) throw ShapeError("ISTFT bin count mismatch");
  const size_t pad = n_fft_ / 2;
  const size_t total = (spec.n_frames == 0 ? 0 : (spec.n_frames - 1) * hop_) +
                       n_fft_;
  std::vector<double> acc(total, 0.0), norm(total, 0.0);
  for (size_t t = 0; t < spec.n_frames; ++t) {
    std::vector<double> frame = fft_.RealInverse(
        std::span<const Complex>(spec.frame(t), spec.n_bins));
    const size_t start = t * hop_;
    for (size_t i = 0; i < n_fft_; ++i) {
      acc[start + i] += frame[i] * window_[i];
      norm[start + i] += window_[i] * window_[i];
    }
  }
  std::vector<double> out(length, 0.0);
  for (size_t i = 0; i < length; ++i) {
    const size_t j = i + pad;
    if (j >= total) break;
    if (norm[j] > 1e-10) out[i] = acc[j] / norm[j];
  }
  return out;
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

namespace {

std::vector<double> MelEdges(const MelParams &p) {
  const double lo = HzToMel(p.fmin), hi = HzToMel(p.fmax);
  std::vector<double> edges(static_cast<size_t>(p.n_mels) + 2);
  for (size_t i = 0; i < edges.size(); ++i)
    edges[i] = MelToHz(lo + (hi - lo) * static_cast<double>(i) /
                                static_cast<double>(p.n_mels + 1));
  return edges;
}

}  // namespace

std::vector<double> MelCenterFrequencies(const MelParams &p) {
  std::vector<double> edges = MelEdges(p);
  return {edges.begin() + 1, edges.end() - 1};
}

std::vector<double> MelFilterbank(const MelParams &p) {
  p.Validate();
  const size_t n_bins = static_cast<size_t>(p.n_fft) / 2 + 1;
  const size_t n_mels = static_cast<size_t>(p.n_mels);
  std::vector<double> edges = MelEdges(p);
  std::vector<double> fb(n_mels * n_bins, 0.0);
  for (size_t m = 0; m < n_mels; ++m) {
    const double left = edges[m], centre = edges[m + 1], right = edges[m + 2];
    for (size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * p.sample_rate / p.n_fft;
      double w = 0.0;
      if (f > left && f <= centre)
        w = (f - left) / (centre - left);
      else if (f > centre && f < right)
        w = (right - f) / (right - centre);
      fb[m * n_bins + k] = w;
    }
  }
  return fb;
}

}  // namespace vocart
