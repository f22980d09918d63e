// include/vocart/model.h

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

#ifndef VOCART_MODEL_H_
#define VOCART_MODEL_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace vocart {

/// Raw-waveform detector layout. `Tiny()` is the desk-scale profile used by
/// the tests; `Paper()` approximates the published backbone.
struct ModelConfig {
  int input_length = 64000;
  int sample_rate = 24000;  // only used to place the initial sinc cutoffs
  int sinc_filters = 20;
  int sinc_kernel = 1025;   // odd
  std::vector<int> block_channels = {20, 128};
  std::vector<int> blocks_per_group = {2, 4};
  int gru_hidden = 256;
  int embedding_dim = 256;
  int num_vocoder_classes = 7;  // real + C vocoders
  uint64_t seed = 0;

  static ModelConfig Tiny(int num_vocoder_classes = 3);
  static ModelConfig Paper(int num_vocoder_classes = 7);

  /// Throws ArgumentError for an unusable layout.
  void Validate() const;
  /// Time steps seen by the recurrent layer.
  int SequenceLength() const;
  bool operator==(const ModelConfig &) const = default;
};

enum class ParamGroup {
  kExtractor,    // shared front end R
  kBinaryHead,   // B
  kVocoderHead,  // M
};

struct Parameter {
  std::string name;
  std::vector<size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;

  size_t size() const { return value.size(); }
  ParamGroup group() const;
};

/// Row-major batch of fixed-length waveforms.
struct Batch {
  size_t size = 0;
  size_t length = 0;
  std::vector<double> data;

  Batch() = default;
  Batch(size_t n, size_t len) : size(n), length(len), data(n * len, 0.0) {}
  std::span<double> row(size_t i) { return {data.data() + i * length, length}; }
  std::span<const double> row(size_t i) const {
    return {data.data() + i * length, length};
  }
};

/// Row-major (rows x cols) block of per-utterance vectors.
struct Rows {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;

  Rows() = default;
  Rows(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double &at(size_t r, size_t c) { return data[r * cols + c]; }
  double at(size_t r, size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(size_t r) const {
    return {data.data() + r * cols, cols};
  }
};

struct ModelOutput {
  Rows binary;   // B x 1
  Rows vocoder;  // B x (C + 1)
};

struct ForwardTape;  // per-layer activations kept for Backward

/// Cascade detector: shared extractor R (sinc front end, residual blocks with
/// filter-wise feature-map scaling, GRU, linear embedding), binary head B and
/// vocoder-identification head M, both linear on the embedding.
class DetectorModel {
 public:
  /// Mel-spaced sinc cutoffs, seeded uniform fan-in initialisation elsewhere.
  explicit DetectorModel(const ModelConfig &cfg);
  DetectorModel(const DetectorModel &);
  DetectorModel &operator=(const DetectorModel &);
  DetectorModel(DetectorModel &&) noexcept;
  DetectorModel &operator=(DetectorModel &&) noexcept;
  ~DetectorModel();

  const ModelConfig &config() const { return cfg_; }

  std::vector<Parameter> &parameters() { return params_; }
  const std::vector<Parameter> &parameters() const { return params_; }
  /// Batch-norm running statistics; saved with the model, never trained.
  std::vector<Parameter> &buffers() { return buffers_; }
  const std::vector<Parameter> &buffers() const { return buffers_; }
  Parameter &param(const std::string &name);
  const Parameter &param(const std::string &name) const;
  size_t NumParameters() const;

  /// Embeddings R(x), B x embedding_dim, using running batch-norm statistics.
  Rows ExtractFeatures(const Batch &batch) const;
  /// B x 1 logits; sigmoid(logit) = P(fake).
  Rows BinaryLogits(const Rows &embeddings) const;
  /// B x (C + 1) logits.
  Rows VocoderLogits(const Rows &embeddings) const;
  /// Evaluation-mode forward through one shared extractor pass.
  ModelOutput Forward(const Batch &batch) const;

  /// Training-mode forward (batch statistics). Keeps activations in `tape`.
  ModelOutput ForwardTrain(const Batch &batch, ForwardTape &tape,
                           bool update_running_stats = true);
  /// Accumulates parameter gradients for upstream gradients w.r.t. the
  /// logits. An empty `d_vocoder` skips the vocoder head entirely.
  void Backward(const ForwardTape &tape, const Rows &d_binary,
                const Rows &d_vocoder);
  void ZeroGrad();

  /// Impulse response of sinc filter `f` (length sinc_kernel).
  std::vector<double> SincFilter(int f) const;

 private:
  struct Layers;

  void CheckBatch(const Batch &batch) const;

  ModelConfig cfg_;
  std::vector<Parameter> params_;
  std::vector<Parameter> buffers_;
  std::unique_ptr<Layers> layers_;
};

/// Owns the activations of one training forward pass.
struct ForwardTape {
  ForwardTape();
  ~ForwardTape();
  ForwardTape(ForwardTape &&) noexcept;
  ForwardTape &operator=(ForwardTape &&) noexcept;

  struct Impl;
  std::unique_ptr<Impl> impl;
};

double Sigmoid(double x);
/// Row-wise softmax.
Rows Softmax(const Rows &logits);

}  // namespace vocart

#endif  // VOCART_MODEL_H_
