// include/vocart/fft.h

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

#ifndef VOCART_FFT_H_
#define VOCART_FFT_H_

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace vocart {

using Complex = std::complex<double>;

/// FFTW-backed transforms of a fixed power-of-two size. Plans are made once
/// per size; every transform is const and may be shared between threads.
class Fft {
 public:
  explicit Fft(size_t n);

  size_t size() const { return n_; }

  /// In-place forward transform (no scaling).
  void Forward(std::span<Complex> data) const;
  /// In-place inverse transform, scaled by 1/n.
  void Inverse(std::span<Complex> data) const;

  /// Spectrum of a real frame of length <= n (zero padded); returns n/2+1 bins.
  std::vector<Complex> RealForward(std::span<const double> frame) const;
  /// Inverse of RealForward for a Hermitian spectrum given as n/2+1 bins.
  std::vector<double> RealInverse(std::span<const Complex> half) const;

 private:
  struct Plans;

  size_t n_;
  std::shared_ptr<const Plans> plans_;
};

bool IsPowerOfTwo(size_t n);
size_t NextPowerOfTwo(size_t n);

}  // namespace vocart

#endif  // VOCART_FFT_H_
