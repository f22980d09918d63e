// include/vocart/vocoder.h

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

#ifndef VOCART_VOCODER_H_
#define VOCART_VOCODER_H_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "vocart/audio.h"

namespace vocart {

/// Deterministic post-filter that stamps a recognisable fingerprint on a
/// reconstructed waveform.
struct Signature {
  enum class Kind { kComb, kNotch, kQuantize };
  Kind kind = Kind::kComb;
  int delay = 8;          // comb: delay in samples, >= 1
  double gain = 0.5;      // comb: feedforward gain in (0, 1]
  double notch_hz = 3000; // notch: centre frequency, (0, nyquist)
  double q = 5.0;         // notch: quality factor, > 0
  int bits = 8;           // quantize: 2..12

  static Signature Comb(int delay, double gain = 0.5);
  static Signature Notch(double hz, double q);
  static Signature Quantize(int bits);

  /// Throws ArgumentError for out-of-range parameters.
  void Validate(int sample_rate) const;
  /// Short stable tag, e.g. "comb-d8", "notch-3000-q5", "quant-b8".
  std::string Tag() const;
  bool operator==(const Signature &) const = default;
};

/// comb:     y[n] = (x[n] + g x[n-d]) / (1 + g)
/// notch:    RBJ biquad band-stop at notch_hz with quality q
/// quantize: uniform mid-tread quantiser with 2^bits levels on [-1, 1)
Waveform ApplySignature(const Waveform &w, const Signature &sig);

/// A mel-to-waveform synthesiser. Implementations are stateless after
/// construction and safe to call concurrently.
class VocoderBackend {
 public:
  virtual ~VocoderBackend() = default;

  virtual const std::string &name() const = 0;
  virtual Waveform Vocode(const MelSpectrogram &mel) const = 0;
  /// Waveform -> mel -> waveform. Backends that consume audio directly
  /// (external programs) override this.
  virtual Waveform SelfVocode(const Waveform &w, const MelParams &p) const;
};

/// Declarative description of a backend; the unit of configuration and of
/// registry serialisation.
struct BackendSpec {
  enum class Type { kGriffinLim, kToy, kExternal };
  Type type = Type::kGriffinLim;
  std::string name;
  int n_iters = 32;
  uint64_t seed = 0;
  Signature signature;  // kToy only
  std::string command;  // kExternal only: program followed by fixed arguments

  bool operator==(const BackendSpec &) const = default;
};

/// Mel inversion by clamped filterbank pseudo-inverse followed by
/// Griffin-Lim phase reconstruction. Initial phases are drawn from `seed`.
class GriffinLimBackend : public VocoderBackend {
 public:
  GriffinLimBackend(std::string name, const MelParams &p, int n_iters,
                    uint64_t seed = 0);

  const std::string &name() const override { return name_; }
  Waveform Vocode(const MelSpectrogram &mel) const override;

  int n_iters() const { return n_iters_; }
  /// Linear-frequency power estimate, frames x (n_fft/2 + 1).
  std::vector<double> InvertMel(const MelSpectrogram &mel) const;

 private:
  std::string name_;
  MelParams params_;
  int n_iters_;
  uint64_t seed_;
  std::vector<double> pinv_;  // n_bins x n_mels
};

/// Griffin-Lim followed by a signature filter.
class ToyArtifactBackend : public VocoderBackend {
 public:
  ToyArtifactBackend(std::string name, const MelParams &p,
                     const Signature &sig, int n_iters = 32,
                     uint64_t seed = 0);

  const std::string &name() const override { return name_; }
  Waveform Vocode(const MelSpectrogram &mel) const override;
  const Signature &signature() const { return signature_; }

 private:
  std::string name_;
  Signature signature_;
  GriffinLimBackend inner_;
};

/// Runs a user program as `command... <in.wav> <out.wav>`, one process per
/// call. Exit code 0 means success. Only waveform input is supported.
class ExternalCommandBackend : public VocoderBackend {
 public:
  ExternalCommandBackend(std::string name, std::string command);

  const std::string &name() const override { return name_; }
  Waveform Vocode(const MelSpectrogram &mel) const override;
  Waveform SelfVocode(const Waveform &w, const MelParams &p) const override;

 private:
  std::string name_;
  std::vector<std::string> argv_;
};

std::shared_ptr<const VocoderBackend> MakeBackend(const BackendSpec &spec,
                                                  const MelParams &p);

/// name <-> class id mapping as persisted in manifests and checkpoints.
struct RegistryEntry {
  int class_id = 0;
  std::string name;
  bool operator==(const RegistryEntry &) const = default;
};
using RegistrySnapshot = std::vector<RegistryEntry>;

/// Ordered set of backends. Class 0 is reserved for real speech; backends
/// get ids 1..C in insertion order.
class VocoderRegistry {
 public:
  VocoderRegistry() = default;

  /// Returns the new class id. Throws ArgumentError on a duplicate name.
  int Add(std::shared_ptr<const VocoderBackend> backend);
  /// Builds every spec with MakeBackend and adds it.
  static VocoderRegistry FromSpecs(const std::vector<BackendSpec> &specs,
                                   const MelParams &p);

  size_t size() const { return backends_.size(); }
  bool empty() const { return backends_.empty(); }
  /// Number of classes of the vocoder-identification head (C + 1).
  int num_classes() const { return static_cast<int>(backends_.size()) + 1; }
  const VocoderBackend &backend(int class_id) const;
  int ClassOf(const std::string &name) const;
  RegistrySnapshot Snapshot() const;

  /// Throws ArgumentError when fewer than two vocoders are registered.
  void RequireMultiClass() const;

 private:
  std::vector<std::shared_ptr<const VocoderBackend>> backends_;
};

/// Checks ids are exactly 1..C with unique names.
void ValidateSnapshot(const RegistrySnapshot &snapshot);

/// Mel-analyses w and resynthesises it with `backend`. The result has the
/// input's sample rate and length (zero padded or trimmed by < one hop).
Waveform SelfVocode(const Waveform &w, const MelParams &p,
                    const VocoderBackend &backend);

/// Frame-aligned elementwise difference of log-mel spectrograms.
struct MelResidual {
  size_t n_frames = 0;
  size_t n_mels = 0;
  std::vector<double> values;

  double at(size_t t, size_t m) const { return values[t * n_mels + m]; }
  double MeanAbs() const;
};

/// mel(original) - mel(vocoded), trimmed to the shorter frame count.
MelResidual SpectrogramDifference(const Waveform &original,
                                  const Waveform &vocoded, const MelParams &p);

}  // namespace vocart

#endif  // VOCART_VOCODER_H_
