// include/vocart/checkpoint.h

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

#ifndef VOCART_CHECKPOINT_H_
#define VOCART_CHECKPOINT_H_

#include <filesystem>
#include <optional>

#include "vocart/model.h"
#include "vocart/optim.h"
#include "vocart/vocoder.h"

namespace vocart {

struct OptimizerSnapshot {
  double learning_rate = 0.0;
  AdamConfig config;
  AdamState state;
};

struct Checkpoint {
  DetectorModel model;
  RegistrySnapshot registry;
  std::optional<OptimizerSnapshot> optimizer;
  long step = 0;
  double dev_eer = -1.0;  // negative when never evaluated
};

/// Container layout:
///   "VOCARTCK" | uint32 version | uint64 header bytes | JSON header | float64 data
/// The header holds the model config, registry, bookkeeping, and for every
/// tensor its name, kind, shape and element offset into the data block.
/// Written to a temporary file and renamed into place.
void SaveCheckpoint(const std::filesystem::path &path,
                    const DetectorModel &model,
                    const RegistrySnapshot &registry,
                    const OptimizerSnapshot *optimizer = nullptr,
                    long step = 0, double dev_eer = -1.0);

/// Throws IoError or FormatError for unreadable, truncated or foreign files.
Checkpoint LoadCheckpoint(const std::filesystem::path &path);

}  // namespace vocart

#endif  // VOCART_CHECKPOINT_H_
