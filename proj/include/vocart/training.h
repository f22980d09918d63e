// include/vocart/training.h

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

#ifndef VOCART_TRAINING_H_
#define VOCART_TRAINING_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vocart/dataset.h"
#include "vocart/model.h"
#include "vocart/optim.h"

namespace vocart {

struct TrainConfig {
  double lambda = 0.5;
  double learning_rate = 1e-4;
  int batch_size = 32;
  long max_steps = 10000;
  uint64_t seed = 0;
  AdamConfig adam;
  long eval_interval = 500;
  bool augment_train = false;
  /// Trains the binary head alone; the vocoder head receives no gradient.
  bool binary_only = false;
  int workers = 1;

  /// Throws ArgumentError.
  void Validate() const;
  bool operator==(const TrainConfig &) const = default;
};

struct LossValues {
  double total = 0.0;
  double l_binary = 0.0;  // mean sigmoid cross-entropy
  double l_mult = 0.0;    // mean softmax cross-entropy
};

struct JointLossResult {
  LossValues loss;
  Rows d_binary;   // d total / d binary logits
  Rows d_vocoder;  // d total / d vocoder logits
};

/// total = lambda * l_binary + (1 - lambda) * l_mult, with the gradients of
/// total w.r.t. both logit blocks. Throws ShapeError on misaligned inputs and
/// ArgumentError for labels outside {0, 1}, classes outside 0..C or lambda
/// outside [0, 1].
JointLossResult JointLoss(const Rows &binary_logits, const Rows &vocoder_logits,
                          std::span<const int> labels,
                          std::span<const int> classes, double lambda);

struct MetricsRow {
  long step = 0;
  LossValues loss;
  std::optional<double> dev_eer;
  double wall_time = 0.0;  // seconds since the run started
};

/// One JSON object per line.
std::string FormatMetricsRow(const MetricsRow &r);
MetricsRow ParseMetricsRow(const std::string &line);
std::vector<MetricsRow> ReadMetrics(const std::filesystem::path &path);

struct TrainOptions {
  /// Required when augment_train is set.
  const AugmentPolicy *augment = nullptr;
  /// Called after every step (and after dev evaluation on eval steps).
  std::function<void(const MetricsRow &)> on_step;
};

struct TrainState {
  DetectorModel model;       // parameters after the final step
  DetectorModel best_model;  // parameters with the lowest dev EER seen
  AdamState optimizer;
  long step = 0;
  long best_step = 0;
  double best_dev_eer = std::numeric_limits<double>::infinity();
  std::vector<MetricsRow> history;
  std::filesystem::path metrics_path;
  std::filesystem::path last_checkpoint;
  std::filesystem::path best_checkpoint;
};

/// Seeded mini-batch Adam on JointLoss over the train split. Batches walk a
/// fresh seeded permutation each epoch; each utterance is randomly cropped
/// (or tiled) to the model input length. Dev EER is measured every
/// eval_interval steps and after the last step. Writes metrics.jsonl,
/// last.ckpt and best.ckpt to `workdir`.
///
/// Throws ConfigError if the manifest lacks train or dev records, the train
/// split lacks a label, or the model class count disagrees with the manifest.
/// A non-finite loss writes diverged.ckpt and throws TrainingError.
/// Deterministic for a fixed seed; the worker count only affects audio
/// loading and dev scoring.
TrainState Train(const Manifest &manifest, const ModelConfig &mcfg,
                 const TrainConfig &tcfg, const std::filesystem::path &workdir,
                 const TrainOptions &opts = {});

struct AblationRow {
  double lambda = 0.0;
  double test_eer = 0.0;
};

/// Trains one model per lambda (same seed, same data order) in
/// workdir/lambda-<value>/, scores each best-by-dev model on the test split
/// and writes workdir/ablation.tsv.
std::vector<AblationRow> RunLambdaAblation(const Manifest &manifest,
                                           const ModelConfig &mcfg,
                                           const TrainConfig &tmpl,
                                           const std::vector<double> &lambdas,
                                           const std::filesystem::path &workdir,
                                           const TrainOptions &opts = {});

/// Header "lambda<TAB>test_eer", one row per lambda.
void WriteAblationTable(const std::vector<AblationRow> &rows,
                        const std::filesystem::path &path);
std::vector<AblationRow> ReadAblationTable(const std::filesystem::path &path);

}  // namespace vocart

#endif  // VOCART_TRAINING_H_
