// include/vocart/plot.h

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

#ifndef VOCART_PLOT_H_
#define VOCART_PLOT_H_

#include <filesystem>
#include <string>
#include <vector>

#include "vocart/audio.h"
#include "vocart/evaluation.h"
#include "vocart/training.h"
#include "vocart/vocoder.h"

namespace vocart {

// SVG figures. Every data cell or point carries data-* attributes with its
// numeric value so the files can be checked without rasterising.

/// Three stacked heatmaps: original mel, vocoded mel, residual.
void PlotSpecDiff(const MelSpectrogram &original, const MelSpectrogram &vocoded,
                  const MelResidual &residual, const std::string &title,
                  const std::filesystem::path &out);

/// Row-normalised heatmap annotated with counts.
void PlotConfusion(const ConfusionMatrix &cm,
                   const std::vector<std::string> &class_names,
                   const std::filesystem::path &out);

/// FAR and FRR against threshold, with the EER marked.
void PlotDet(const ScoreSet &scores, const std::filesystem::path &out);

/// Test EER against lambda.
void PlotAblation(const std::vector<AblationRow> &rows,
                  const std::filesystem::path &out);

}  // namespace vocart

#endif  // VOCART_PLOT_H_
