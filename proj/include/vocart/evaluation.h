// include/vocart/evaluation.h

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

#ifndef VOCART_EVALUATION_H_
#define VOCART_EVALUATION_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vocart/dataset.h"
#include "vocart/model.h"
#include "vocart/vocoder.h"

namespace vocart {

struct ScoreEntry {
  std::string utterance_id;
  double score = 0.0;  // P(fake)
  int label = 0;
  int true_class = 0;
  int pred_class = -1;  // -1 when no prediction is available
  bool operator==(const ScoreEntry &) const = default;
};

struct ScoreSet {
  std::vector<ScoreEntry> entries;
  /// Branch usage when scored with augmentation, keyed by branch name.
  std::map<std::string, long> branch_counts;
  bool operator==(const ScoreSet &) const = default;
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

/// Higher score = more likely fake. FAR(t) is the fraction of real entries
/// with score >= t, FRR(t) the fraction of fake entries with score < t, swept
/// over every distinct score and +inf. The EER is read at the first sweep
/// point where FAR <= FRR, linearly interpolated from the point before it.
/// Throws ArgumentError unless both labels occur and all scores are finite.
EerResult ComputeEer(const ScoreSet &s);

struct DetPoint {
  double threshold = 0.0;  // the last point has threshold +inf
  double far = 0.0;
  double frr = 0.0;
};

/// The full sweep used by ComputeEer, in increasing threshold order. Starts
/// at (FAR 1, FRR 0) and ends at (FAR 0, FRR 1).
std::vector<DetPoint> DetCurve(const ScoreSet &s);

/// rows = true class, columns = predicted class.
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<long> counts;

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int n)
      : num_classes(n), counts(static_cast<size_t>(n) * n, 0) {}
  long at(int t, int p) const { return counts[t * num_classes + p]; }
  long &at(int t, int p) { return counts[t * num_classes + p]; }
  long RowSum(int t) const;
  long Total() const;
  /// Row-normalised; rows without samples are all zero.
  std::vector<double> Rates() const;
  double Accuracy() const;
  /// Diagonal of Rates().
  std::vector<double> PerClassAccuracy() const;
};

/// Throws ArgumentError when an entry lacks a prediction or a class is
/// outside 0..num_classes-1.
ConfusionMatrix ComputeConfusion(const ScoreSet &s, int num_classes);

struct ScoreOptions {
  int workers = 1;
  int batch_size = 16;
};

/// Scores every record of `split`. Audio is resampled to the model rate if
/// needed, optionally degraded with `augment`, then centre-cropped or tiled
/// to the model input length. Each utterance draws its augmentation from a
/// stream keyed by (seed, utterance id), so results do not depend on order
/// or worker count. Throws ConfigError when `model_registry` and the
/// manifest registry disagree.
ScoreSet ScoreManifest(const DetectorModel &model,
                       const RegistrySnapshot &model_registry,
                       const Manifest &manifest, Split split,
                       const AugmentPolicy *augment, uint64_t seed,
                       const ScoreOptions &opts = {});

/// Tab-separated: utterance_id, score, label, true_class, pred_class.
void WriteScores(const ScoreSet &s, const std::filesystem::path &path);
ScoreSet ReadScores(const std::filesystem::path &path);

/// Tab-separated count matrix with a header row of class names.
void WriteConfusion(const ConfusionMatrix &cm,
                    const std::vector<std::string> &class_names,
                    const std::filesystem::path &path);
ConfusionMatrix ReadConfusion(const std::filesystem::path &path,
                              std::vector<std::string> *class_names = nullptr);

/// "real" followed by the registry names in class order.
std::vector<std::string> ClassNames(const RegistrySnapshot &registry);

}  // namespace vocart

#endif  // VOCART_EVALUATION_H_
