// src/audio.cc

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

#include "vocart/audio.h"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <numbers>
#include <sstream>
#include <tuple>

#include "vocart/errors.h"
#include "vocart/stft.h"

namespace vocart {

void Warn(const std::string &msg) { std::cerr << "WARNING: " << msg << '\n'; }

void Waveform::Validate() const {
  if (sample_rate <= 0)
    throw ArgumentError("sample rate must be positive, got " +
                        std::to_string(sample_rate));
  for (double v : samples)
    if (!std::isfinite(v)) throw ArgumentError("waveform has non-finite samples");
}

void MelParams::Validate() const {
  if (sample_rate <= 0) throw ArgumentError("MelParams: sample_rate <= 0");
  if (n_fft <= 0 || !IsPowerOfTwo(static_cast<size_t>(n_fft)))
    throw ArgumentError("MelParams: n_fft must be a power of two");
  if (hop_length <= 0 || hop_length > win_length || win_length > n_fft)
    throw ArgumentError("MelParams: need 0 < hop_length <= win_length <= n_fft");
  if (n_mels <= 0) throw ArgumentError("MelParams: n_mels <= 0");
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0))
    throw ArgumentError("MelParams: need 0 <= fmin < fmax <= sample_rate/2");
}

// ---------------------------------------------------------------------------
// WAV I/O

namespace {

uint16_t ReadU16(const unsigned char *p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}
uint32_t ReadU32(const unsigned char *p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

void PutU16(std::string &out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}
void PutU32(std::string &out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

Waveform LoadAudio(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  const auto *data = reinterpret_cast<const unsigned char *>(bytes.data());
  const size_t size = bytes.size();
  if (size < 12 || std::memcmp(data, "RIFF", 4) != 0 ||
      std::memcmp(data + 8, "WAVE", 4) != 0)
    throw FormatError(path.string() + ": not a RIFF/WAVE file");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const unsigned char *pcm = nullptr;
  size_t pcm_bytes = 0;
  size_t pos = 12;
  while (pos + 8 <= size) {
    const unsigned char *chunk = data + pos;
    uint32_t chunk_size = ReadU32(chunk + 4);
    size_t body = pos + 8;
    size_t avail = std::min<size_t>(chunk_size, size - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw FormatError(path.string() + ": short fmt chunk");
      format = ReadU16(data + body);
      channels = ReadU16(data + body + 2);
      rate = ReadU32(data + body + 4);
      bits = ReadU16(data + body + 14);
      if (format == kFormatExtensible) {
        if (avail < 26) throw FormatError(path.string() + ": short fmt chunk");
        format = ReadU16(data + body + 24);  // first two bytes of SubFormat GUID
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      pcm = data + body;
      pcm_bytes = avail;
    }
    pos = body + chunk_size + (chunk_size & 1);
  }
  if (channels == 0 || rate == 0)
    throw FormatError(path.string() + ": missing or invalid fmt chunk");
  if (pcm == nullptr) throw FormatError(path.string() + ": missing data chunk");

  const bool is_pcm16 = format == kFormatPcm && bits == 16;
  const bool is_float = format == kFormatFloat && bits == 32;
  if (!is_pcm16 && !is_float) {
    std::ostringstream msg;
    msg << path.string() << ": unsupported encoding (format " << format << ", "
        << bits << " bits); only PCM16 and float32 are read";
    throw FormatError(msg.str());
  }
  const size_t bytes_per_sample = bits / 8;
  const size_t frame_bytes = bytes_per_sample * channels;
  const size_t n = pcm_bytes / frame_bytes;
  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (size_t c = 0; c < channels; ++c) {
      const unsigned char *p = pcm + i * frame_bytes + c * bytes_per_sample;
      if (is_pcm16) {
        acc += static_cast<int16_t>(ReadU16(p)) / 32768.0;
      } else {
        uint32_t u = ReadU32(p);
        float f;
        std::memcpy(&f, &u, sizeof f);
        acc += f;
      }
    }
    w.samples[i] = acc / channels;
  }
  for (double v : w.samples)
    if (!std::isfinite(v))
      throw FormatError(path.string() + ": non-finite float samples");
  return w;
}

void SaveAudio(const Waveform &w, const std::filesystem::path &path,
               PcmFormat format) {
  if (w.sample_rate <= 0) throw ArgumentError("SaveAudio: invalid sample rate");
  for (double v : w.samples)
    if (!std::isfinite(v)) throw ArgumentError("SaveAudio: non-finite samples");
  size_t clipped = 0;
  for (double v : w.samples)
    if (v > 1.0 || v < -1.0) ++clipped;
  if (clipped > 0)
    Warn(path.string() + ": " + std::to_string(clipped) +
         " samples outside [-1, 1] saturated");

  const uint16_t bits = format == PcmFormat::kPcm16 ? 16 : 32;
  const uint32_t data_bytes = static_cast<uint32_t>(w.size() * bits / 8);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutU32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutU32(out, 16);
  PutU16(out, format == PcmFormat::kPcm16 ? kFormatPcm : kFormatFloat);
  PutU16(out, 1);
  PutU32(out, static_cast<uint32_t>(w.sample_rate));
  PutU32(out, static_cast<uint32_t>(w.sample_rate) * bits / 8);
  PutU16(out, bits / 8);
  PutU16(out, bits);
  out += "data";
  PutU32(out, data_bytes);
  for (double v : w.samples) {
    v = std::clamp(v, -1.0, 1.0);
    if (format == PcmFormat::kPcm16) {
      long q = std::lround(v * 32768.0);
      q = std::clamp(q, -32768L, 32767L);
      PutU16(out, static_cast<uint16_t>(static_cast<int16_t>(q)));
    } else {
      float f = static_cast<float>(v);
      uint32_t u;
      std::memcpy(&u, &f, sizeof u);
      PutU32(out, u);
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Resampling

namespace {

double Sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// Kaiser-windowed lowpass kernel evaluated at offset t (input samples).
struct KaiserSinc {
  double cutoff;      // relative to input Nyquist
  double half_width;  // input samples
  double beta;
  double norm;

  KaiserSinc(double cutoff, double half_width, double beta)
      : cutoff(cutoff), half_width(half_width), beta(beta),
        norm(1.0 / std::cyl_bessel_i(0.0, beta)) {}

  double operator()(double t) const {
    const double r = t / half_width;
    if (r <= -1.0 || r >= 1.0) return 0.0;
    const double w = std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) * norm;
    return cutoff * Sinc(cutoff * t) * w;
  }
};

using TableKey = std::tuple<int, int, int, double, double>;
std::mutex g_table_mutex;
std::map<TableKey, std::shared_ptr<const std::vector<double>>> g_tables;

}  // namespace

Waveform Resample(const Waveform &w, int target_rate,
                  const ResampleOptions &opts) {
  if (target_rate <= 0)
    throw ArgumentError("resample target rate must be positive");
  if (w.sample_rate <= 0)
    throw ArgumentError("resample source rate must be positive");
  if (opts.zero_crossings <= 0 || !(opts.rolloff > 0.0 && opts.rolloff <= 1.0))
    throw ArgumentError("invalid resample options");
  if (target_rate == w.sample_rate) return w;

  const uint64_t g = std::gcd(static_cast<uint64_t>(w.sample_rate),
                              static_cast<uint64_t>(target_rate));
  const uint64_t up = static_cast<uint64_t>(target_rate) / g;
  const uint64_t down = static_cast<uint64_t>(w.sample_rate) / g;
  const double cutoff =
      std::min(1.0, static_cast<double>(target_rate) / w.sample_rate) *
      opts.rolloff;
  const KaiserSinc kernel(cutoff, opts.zero_crossings / cutoff,
                          opts.kaiser_beta);
  const long reach = static_cast<long>(std::ceil(kernel.half_width)) + 1;
  const size_t taps = static_cast<size_t>(2 * reach + 1);

  const uint64_t len = w.size();
  const uint64_t n_out = (len * up + down / 2) / down;

  // Polyphase table: row phi holds kernel(phi/up - j) for j in [-reach, reach].
  std::shared_ptr<const std::vector<double>> table;
  if (up <= 4096) {
    const TableKey key{w.sample_rate, target_rate, opts.zero_crossings,
                       opts.rolloff, opts.kaiser_beta};
    std::lock_guard<std::mutex> lock(g_table_mutex);
    auto &slot = g_tables[key];
    if (!slot) {
      auto t = std::make_shared<std::vector<double>>(up * taps);
      for (uint64_t phi = 0; phi < up; ++phi)
        for (long j = -reach; j <= reach; ++j)
          (*t)[phi * taps + static_cast<size_t>(j + reach)] =
              kernel(static_cast<double>(phi) / up - j);
      slot = std::move(t);
    }
    table = slot;
  }
  const bool tabulate = table != nullptr;

  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  const long n_in = static_cast<long>(len);
  std::vector<double> row(taps);
  for (uint64_t m = 0; m < n_out; ++m) {
    const long base = static_cast<long>((m * down) / up);
    const uint64_t phi = (m * down) % up;
    const double *coef;
    if (tabulate) {
      coef = table->data() + phi * taps;
    } else {
      for (long j = -reach; j <= reach; ++j)
        row[static_cast<size_t>(j + reach)] =
            kernel(static_cast<double>(phi) / up - j);
      coef = row.data();
    }
    const long lo = std::max(-reach, -base);
    const long hi = std::min(reach, n_in - 1 - base);
    double acc = 0.0;
    for (long j = lo; j <= hi; ++j)
      acc += w.samples[static_cast<size_t>(base + j)] *
             coef[static_cast<size_t>(j + reach)];
    out.samples[m] = acc;
  }
  return out;
}

Waveform DegradeRoundtrip(const Waveform &w, int intermediate_rate,
                          const ResampleOptions &opts) {
  if (intermediate_rate == w.sample_rate) return w;
  Waveform back = Resample(Resample(w, intermediate_rate, opts), w.sample_rate,
                           opts);
  back.samples.resize(w.size(), 0.0);
  return back;
}

// ---------------------------------------------------------------------------
// Noise mixing

double MeanPower(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

Waveform MixNoiseAtSnr(const Waveform &clean, const Waveform &noise,
                       double snr_db, size_t noise_offset) {
  if (clean.sample_rate != noise.sample_rate)
    throw ArgumentError("noise and clean sample rates differ");
  if (noise.samples.empty()) throw ArgumentError("noise signal is empty");
  if (!std::isfinite(snr_db)) throw ArgumentError("SNR must be finite");
  std::vector<double> segment(clean.size());
  for (size_t i = 0; i < clean.size(); ++i)
    segment[i] = noise.samples[(noise_offset + i) % noise.size()];
  const double p_clean = MeanPower(clean.samples);
  const double p_noise = MeanPower(segment);
  if (p_clean <= 0.0) throw ArgumentError("clean signal is silent");
  if (p_noise <= 0.0) throw ArgumentError("noise segment is silent");
  const double alpha =
      std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));
  Waveform out = clean;
  for (size_t i = 0; i < out.size(); ++i) out.samples[i] += alpha * segment[i];
  return out;
}

// ---------------------------------------------------------------------------
// Mel analysis

MelSpectrogram ComputeMelSpectrogram(const Waveform &w, const MelParams &p,
                                     StftPadding padding) {
  p.Validate();
  if (w.sample_rate != p.sample_rate)
    throw ArgumentError("mel: waveform rate " + std::to_string(w.sample_rate) +
                        " != analysis rate " + std::to_string(p.sample_rate));
  if (w.size() < static_cast<size_t>(p.win_length) ||
      (padding == StftPadding::kNone && w.size() < static_cast<size_t>(p.n_fft)))
    throw ArgumentError("mel: signal shorter than the analysis window");

  const Stft stft(p);
  const ComplexSpectrogram spec = stft.Forward(w.samples, padding);
  const std::vector<double> fb = MelFilterbank(p);
  const size_t n_bins = spec.n_bins, n_mels = static_cast<size_t>(p.n_mels);

  MelSpectrogram mel;
  mel.params = p;
  mel.n_frames = spec.n_frames;
  mel.values.resize(mel.n_frames * n_mels);
  const double floor_power = std::exp(p.log_floor);
  std::vector<double> power(n_bins);
  for (size_t t = 0; t < spec.n_frames; ++t) {
    const Complex *frame = spec.frame(t);
    for (size_t k = 0; k < n_bins; ++k) power[k] = std::norm(frame[k]);
    for (size_t m = 0; m < n_mels; ++m) {
      const double *row = fb.data() + m * n_bins;
      double e = 0.0;
      for (size_t k = 0; k < n_bins; ++k) e += row[k] * power[k];
      mel.at(t, m) = std::log(std::max(e, floor_power));
    }
  }
  return mel;
}

// ---------------------------------------------------------------------------

Waveform FixLength(const Waveform &w, size_t n, FixMode mode, Rng *rng) {
  if (n == 0) throw ArgumentError("FixLength: target length must be positive");
  if (w.samples.empty()) throw ArgumentError("FixLength: empty waveform");
  Waveform out;
  out.sample_rate = w.sample_rate;
  const size_t len = w.size();
  if (len == n) return w;
  if (len < n || mode == FixMode::kTile) {
    out.samples.resize(n);
    for (size_t i = 0; i < n; ++i) out.samples[i] = w.samples[i % len];
    return out;
  }
  size_t start = 0;
  if (mode == FixMode::kCropCenter) {
    start = (len - n) / 2;
  } else {
    if (rng == nullptr)
      throw ArgumentError("FixLength: random crop needs an RNG");
    start = static_cast<size_t>(rng->Index(len - n + 1));
  }
  out.samples.assign(w.samples.begin() + static_cast<long>(start),
                     w.samples.begin() + static_cast<long>(start + n));
  return out;
}

}  // namespace vocart
