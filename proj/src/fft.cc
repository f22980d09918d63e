// src/fft.cc

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

#include "vocart/fft.h"

#include <fftw3.h>

#include <mutex>

#include "vocart/errors.h"

namespace vocart {

namespace {

// FFTW's planner is not thread-safe; execution with the new-array interface is.
std::mutex &PlannerMutex() {
  static std::mutex mu;
  return mu;
}

fftw_complex *Fc(Complex *p) { return reinterpret_cast<fftw_complex *>(p); }

}  // namespace

struct Fft::Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;

  explicit Plans(size_t n) {
    const int len = static_cast<int>(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::vector<Complex> a(n), b(n);
    std::vector<double> r(n);
    std::lock_guard<std::mutex> lock(PlannerMutex());
    forward = fftw_plan_dft_1d(len, Fc(a.data()), Fc(b.data()), FFTW_FORWARD, flags);
    inverse = fftw_plan_dft_1d(len, Fc(a.data()), Fc(b.data()), FFTW_BACKWARD, flags);
    r2c = fftw_plan_dft_r2c_1d(len, r.data(), Fc(a.data()), flags);
    c2r = fftw_plan_dft_c2r_1d(len, Fc(a.data()), r.data(), flags);
    if (!forward || !inverse || !r2c || !c2r)
      throw Error("FFTW could not create a plan of size " + std::to_string(n));
  }
  ~Plans() {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    for (fftw_plan p : {forward, inverse, r2c, c2r})
      if (p) fftw_destroy_plan(p);
  }
  Plans(const Plans &) = delete;
  Plans &operator=(const Plans &) = delete;
};

bool IsPowerOfTwo(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

size_t NextPowerOfTwo(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

Fft::Fft(size_t n) : n_(n) {
  if (!IsPowerOfTwo(n))
    throw ArgumentError("FFT size must be a power of two, got " +
                        std::to_string(n));
  plans_ = std::make_shared<const Plans>(n);
}

void Fft::Forward(std::span<Complex> data) const {
  if (data.size() != n_) throw ShapeError("FFT input size mismatch");
  std::vector<Complex> out(n_);
  fftw_execute_dft(plans_->forward, Fc(data.data()), Fc(out.data()));
  std::copy(out.begin(), out.end(), data.begin());
}

void Fft::Inverse(std::span<Complex> data) const {
  if (data.size() != n_) throw ShapeError("FFT input size mismatch");
  std::vector<Complex> out(n_);
  fftw_execute_dft(plans_->inverse, Fc(data.data()), Fc(out.data()));
  const double scale = 1.0 / static_cast<double>(n_);
  for (size_t i = 0; i < n_; ++i) data[i] = out[i] * scale;
}

std::vector<Complex> Fft::RealForward(std::span<const double> frame) const {
  if (frame.size() > n_) throw ShapeError("frame longer than FFT size");
  std::vector<double> in(n_, 0.0);
  std::copy(frame.begin(), frame.end(), in.begin());
  std::vector<Complex> out(n_ / 2 + 1);
  fftw_execute_dft_r2c(plans_->r2c, in.data(), Fc(out.data()));
  return out;
}

std::vector<double> Fft::RealInverse(std::span<const Complex> half) const {
  if (half.size() != n_ / 2 + 1) throw ShapeError("half spectrum size mismatch");
  // c2r overwrites its input and ignores the imaginary parts of DC and Nyquist.
  std::vector<Complex> in(half.begin(), half.end());
  std::vector<double> out(n_);
  fftw_execute_dft_c2r(plans_->c2r, Fc(in.data()), out.data());
  const double scale = 1.0 / static_cast<double>(n_);
  for (double &v : out) v *= scale;
  return out;
}

}  // namespace vocart
