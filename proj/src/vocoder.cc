// src/vocoder.cc

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

#include "vocart/vocoder.h"

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "vocart/errors.h"
#include "vocart/stft.h"

extern char **environ;

namespace vocart {

// ---------------------------------------------------------------------------
// Signatures

Signature Signature::Comb(int delay, double gain) {
  Signature s;
  s.kind = Kind::kComb;
  s.delay = delay;
  s.gain = gain;
  return s;
}

Signature Signature::Notch(double hz, double q) {
  Signature s;
  s.kind = Kind::kNotch;
  s.notch_hz = hz;
  s.q = q;
  return s;
}

Signature Signature::Quantize(int bits) {
  Signature s;
  s.kind = Kind::kQuantize;
  s.bits = bits;
  return s;
}

void Signature::Validate(int sample_rate) const {
  switch (kind) {
    case Kind::kComb:
      if (delay < 1) throw ArgumentError("comb delay must be >= 1 sample");
      if (!(gain > 0.0 && gain <= 1.0))
        throw ArgumentError("comb gain must be in (0, 1]");
      break;
    case Kind::kNotch:
      if (!(notch_hz > 0.0 && notch_hz < sample_rate / 2.0))
        throw ArgumentError("notch frequency must be in (0, nyquist)");
      if (!(q > 0.0)) throw ArgumentError("notch Q must be positive");
      break;
    case Kind::kQuantize:
      if (bits < 2 || bits > 12)
        throw ArgumentError("quantizer bits must be in [2, 12]");
      break;
  }
}

std::string Signature::Tag() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::kComb:
      os << "comb-d" << delay;
      break;
    case Kind::kNotch:
      os << "notch-" << notch_hz << "-q" << q;
      break;
    case Kind::kQuantize:
      os << "quant-b" << bits;
      break;
  }
  return os.str();
}

Waveform ApplySignature(const Waveform &w, const Signature &sig) {
  sig.Validate(w.sample_rate);
  Waveform out = w;
  const size_t n = w.size();
  switch (sig.kind) {
    case Signature::Kind::kComb: {
      const size_t d = static_cast<size_t>(sig.delay);
      for (size_t i = 0; i < n; ++i) {
        const double delayed = i >= d ? w.samples[i - d] : 0.0;
        out.samples[i] = (w.samples[i] + sig.gain * delayed) / (1.0 + sig.gain);
      }
      break;
    }
    case Signature::Kind::kNotch: {
      const double w0 = 2.0 * std::numbers::pi * sig.notch_hz / w.sample_rate;
      const double alpha = std::sin(w0) / (2.0 * sig.q);
      const double a0 = 1.0 + alpha;
      const double b0 = 1.0 / a0, b1 = -2.0 * std::cos(w0) / a0, b2 = 1.0 / a0;
      const double a1 = -2.0 * std::cos(w0) / a0, a2 = (1.0 - alpha) / a0;
      double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
      for (size_t i = 0; i < n; ++i) {
        const double x0 = w.samples[i];
        const double y0 = b0 * x0 + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
        x2 = x1;
        x1 = x0;
        y2 = y1;
        y1 = y0;
        out.samples[i] = y0;
      }
      break;
    }
    case Signature::Kind::kQuantize: {
      const double scale = std::ldexp(1.0, sig.bits - 1);
      for (double &v : out.samples) {
        const double q = std::clamp(std::round(v * scale), -scale, scale - 1.0);
        v = q / scale;
      }
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Backends

Waveform VocoderBackend::SelfVocode(const Waveform &w,
                                    const MelParams &p) const {
  return Vocode(ComputeMelSpectrogram(w, p));
}

GriffinLimBackend::GriffinLimBackend(std::string name, const MelParams &p,
                                     int n_iters, uint64_t seed)
    : name_(std::move(name)), params_(p), n_iters_(n_iters), seed_(seed) {
  p.Validate();
  if (n_iters < 1) throw ArgumentError("Griffin-Lim needs n_iters >= 1");
  const size_t n_bins = static_cast<size_t>(p.n_fft) / 2 + 1;
  const size_t n_mels = static_cast<size_t>(p.n_mels);
  const std::vector<double> fb = MelFilterbank(p);
  Eigen::MatrixXd m(n_mels, n_bins);
  for (size_t i = 0; i < n_mels; ++i)
    for (size_t k = 0; k < n_bins; ++k) m(i, k) = fb[i * n_bins + k];
  Eigen::MatrixXd pinv = m.completeOrthogonalDecomposition().pseudoInverse();
  pinv_.resize(n_bins * n_mels);
  for (size_t k = 0; k < n_bins; ++k)
    for (size_t i = 0; i < n_mels; ++i) pinv_[k * n_mels + i] = pinv(k, i);
}

std::vector<double> GriffinLimBackend::InvertMel(const MelSpectrogram &mel) const {
  if (!(mel.params == params_))
    throw BackendError(name_, "mel parameters differ from the backend's");
  const size_t n_bins = static_cast<size_t>(params_.n_fft) / 2 + 1;
  const size_t n_mels = mel.n_mels();
  std::vector<double> power(mel.n_frames * n_bins);
  std::vector<double> lin(n_mels);
  for (size_t t = 0; t < mel.n_frames; ++t) {
    for (size_t m = 0; m < n_mels; ++m) lin[m] = std::exp(mel.at(t, m));
    for (size_t k = 0; k < n_bins; ++k) {
      const double *row = pinv_.data() + k * n_mels;
      double acc = 0.0;
      for (size_t m = 0; m < n_mels; ++m) acc += row[m] * lin[m];
      power[t * n_bins + k] = std::max(acc, 0.0);
    }
  }
  return power;
}

Waveform GriffinLimBackend::Vocode(const MelSpectrogram &mel) const {
  if (mel.n_frames == 0) throw BackendError(name_, "empty mel spectrogram");
  const Stft stft(params_);
  const size_t n_bins = stft.n_bins();
  const std::vector<double> power = InvertMel(mel);
  std::vector<double> magnitude(power.size());
  for (size_t i = 0; i < power.size(); ++i) magnitude[i] = std::sqrt(power[i]);

  const size_t length = (mel.n_frames - 1) * stft.hop();
  ComplexSpectrogram spec;
  spec.n_frames = mel.n_frames;
  spec.n_bins = n_bins;
  spec.data.resize(mel.n_frames * n_bins);
  Rng rng(seed_);
  for (size_t i = 0; i < spec.data.size(); ++i)
    spec.data[i] = std::polar(magnitude[i],
                              2.0 * std::numbers::pi * rng.Uniform());

  std::vector<double> signal;
  for (int it = 0; it < n_iters_; ++it) {
    signal = stft.Inverse(spec, std::max<size_t>(length, 1));
    ComplexSpectrogram est = stft.Forward(signal, StftPadding::kReflect);
    const size_t frames = std::min(est.n_frames, spec.n_frames);
    for (size_t t = 0; t < frames; ++t) {
      for (size_t k = 0; k < n_bins; ++k) {
        const Complex c = est.frame(t)[k];
        const double a = std::abs(c);
        const Complex phase = a > 1e-12 ? c / a : Complex(1.0, 0.0);
        spec.frame(t)[k] = magnitude[t * n_bins + k] * phase;
      }
    }
  }
  signal = stft.Inverse(spec, std::max<size_t>(length, 1));
  return Waveform(std::move(signal), params_.sample_rate);
}

ToyArtifactBackend::ToyArtifactBackend(std::string name, const MelParams &p,
                                       const Signature &sig, int n_iters,
                                       uint64_t seed)
    : name_(std::move(name)), signature_(sig),
      inner_(name_ + "/griffin-lim", p, n_iters, seed) {
  sig.Validate(p.sample_rate);
}

Waveform ToyArtifactBackend::Vocode(const MelSpectrogram &mel) const {
  return ApplySignature(inner_.Vocode(mel), signature_);
}

namespace {

std::vector<std::string> SplitWords(const std::string &s) {
  std::istringstream is(s);
  std::vector<std::string> words;
  for (std::string w; is >> w;) words.push_back(w);
  return words;
}

std::filesystem::path UniqueTempDir() {
  static std::atomic<uint64_t> counter{0};
  const auto base = std::filesystem::temp_directory_path();
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto dir = base / ("vocart-ext-" + std::to_string(::getpid()) + "-" +
                       std::to_string(counter.fetch_add(1)));
    if (std::filesystem::create_directory(dir)) return dir;
  }
  throw IoError("cannot create a temporary directory");
}

}  // namespace

ExternalCommandBackend::ExternalCommandBackend(std::string name,
                                               std::string command)
    : name_(std::move(name)), argv_(SplitWords(command)) {
  if (argv_.empty()) throw ArgumentError("external backend needs a command");
}

Waveform ExternalCommandBackend::Vocode(const MelSpectrogram &) const {
  throw BackendError(name_,
                     "external backends consume waveforms, not mel input");
}

Waveform ExternalCommandBackend::SelfVocode(const Waveform &w,
                                            const MelParams &p) const {
  const auto dir = UniqueTempDir();
  struct Cleanup {
    std::filesystem::path dir;
    ~Cleanup() {
      std::error_code ec;
      std::filesystem::remove_all(dir, ec);
    }
  } cleanup{dir};
  const auto in_path = dir / "in.wav", out_path = dir / "out.wav";
  SaveAudio(w, in_path, PcmFormat::kFloat32);

  std::vector<std::string> args = argv_;
  args.push_back(in_path.string());
  args.push_back(out_path.string());
  std::vector<char *> cargs;
  for (auto &a : args) cargs.push_back(a.data());
  cargs.push_back(nullptr);
  pid_t pid;
  if (posix_spawnp(&pid, cargs[0], nullptr, nullptr, cargs.data(), environ) != 0)
    throw BackendError(name_, "cannot launch '" + argv_[0] + "'");
  int status = 0;
  if (waitpid(pid, &status, 0) < 0)
    throw BackendError(name_, "waitpid failed");
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw BackendError(name_, "command exited with status " +
                                  std::to_string(WIFEXITED(status)
                                                     ? WEXITSTATUS(status)
                                                     : -1));
  Waveform out = LoadAudio(out_path);
  if (out.sample_rate != p.sample_rate)
    throw BackendError(name_, "output sample rate " +
                                  std::to_string(out.sample_rate) +
                                  " != analysis rate " +
                                  std::to_string(p.sample_rate));
  return out;
}

std::shared_ptr<const VocoderBackend> MakeBackend(const BackendSpec &spec,
                                                  const MelParams &p) {
  if (spec.name.empty()) throw ArgumentError("backend name must not be empty");
  switch (spec.type) {
    case BackendSpec::Type::kGriffinLim:
      return std::make_shared<GriffinLimBackend>(spec.name, p, spec.n_iters,
                                                 spec.seed);
    case BackendSpec::Type::kToy:
      return std::make_shared<ToyArtifactBackend>(spec.name, p, spec.signature,
                                                  spec.n_iters, spec.seed);
    case BackendSpec::Type::kExternal:
      return std::make_shared<ExternalCommandBackend>(spec.name, spec.command);
  }
  throw ArgumentError("unknown backend type");
}

// ---------------------------------------------------------------------------
// Registry

int VocoderRegistry::Add(std::shared_ptr<const VocoderBackend> backend) {
  if (!backend) throw ArgumentError("null backend");
  for (const auto &b : backends_)
    if (b->name() == backend->name())
      throw ArgumentError("duplicate vocoder name '" + backend->name() + "'");
  backends_.push_back(std::move(backend));
  return static_cast<int>(backends_.size());
}

VocoderRegistry VocoderRegistry::FromSpecs(const std::vector<BackendSpec> &specs,
                                           const MelParams &p) {
  VocoderRegistry reg;
  for (const auto &s : specs) reg.Add(MakeBackend(s, p));
  return reg;
}

const VocoderBackend &VocoderRegistry::backend(int class_id) const {
  if (class_id < 1 || class_id > static_cast<int>(backends_.size()))
    throw ArgumentError("no vocoder with class id " + std::to_string(class_id));
  return *backends_[static_cast<size_t>(class_id - 1)];
}

int VocoderRegistry::ClassOf(const std::string &name) const {
  for (size_t i = 0; i < backends_.size(); ++i)
    if (backends_[i]->name() == name) return static_cast<int>(i + 1);
  throw ArgumentError("unknown vocoder '" + name + "'");
}

RegistrySnapshot VocoderRegistry::Snapshot() const {
  RegistrySnapshot snap;
  for (size_t i = 0; i < backends_.size(); ++i)
    snap.push_back({static_cast<int>(i + 1), backends_[i]->name()});
  return snap;
}

void VocoderRegistry::RequireMultiClass() const {
  if (backends_.size() < 2)
    throw ArgumentError("vocoder identification needs at least 2 vocoders, got " +
                        std::to_string(backends_.size()));
}

void ValidateSnapshot(const RegistrySnapshot &snapshot) {
  std::set<std::string> names;
  for (size_t i = 0; i < snapshot.size(); ++i) {
    if (snapshot[i].class_id != static_cast<int>(i + 1))
      throw ArgumentError("registry class ids must be 1..C in order");
    if (!names.insert(snapshot[i].name).second)
      throw ArgumentError("duplicate vocoder name '" + snapshot[i].name + "'");
  }
}

// ---------------------------------------------------------------------------

Waveform SelfVocode(const Waveform &w, const MelParams &p,
                    const VocoderBackend &backend) {
  w.Validate();
  Waveform out;
  try {
    out = backend.SelfVocode(w, p);
  } catch (const BackendError &) {
    throw;
  } catch (const std::exception &e) {
    throw BackendError(backend.name(), e.what());
  }
  if (out.sample_rate != w.sample_rate)
    throw BackendError(backend.name(), "output sample rate differs from input");
  out.samples.resize(w.size(), 0.0);
  return out;
}

double MelResidual::MeanAbs() const {
  if (values.empty()) return 0.0;
  double acc = 0.0;
  for (double v : values) acc += std::abs(v);
  return acc / static_cast<double>(values.size());
}

MelResidual SpectrogramDifference(const Waveform &original,
                                  const Waveform &vocoded, const MelParams &p) {
  if (original.sample_rate != vocoded.sample_rate)
    throw ArgumentError("spectrogram difference needs equal sample rates");
  const MelSpectrogram a = ComputeMelSpectrogram(original, p);
  const MelSpectrogram b = ComputeMelSpectrogram(vocoded, p);
  MelResidual r;
  r.n_frames = std::min(a.n_frames, b.n_frames);
  r.n_mels = a.n_mels();
  r.values.resize(r.n_frames * r.n_mels);
  for (size_t t = 0; t < r.n_frames; ++t)
    for (size_t m = 0; m < r.n_mels; ++m)
      r.values[t * r.n_mels + m] = a.at(t, m) - b.at(t, m);
  return r;
}

}  // namespace vocart
