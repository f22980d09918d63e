// include/vocart/config.h

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

#ifndef VOCART_CONFIG_H_
#define VOCART_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "vocart/audio.h"
#include "vocart/dataset.h"
#include "vocart/model.h"
#include "vocart/training.h"
#include "vocart/vocoder.h"

namespace vocart {

/// Serialisable form of AugmentPolicy; the noise is referenced by path.
struct AugmentSpec {
  double p_original = 0.4;
  double p_resampled = 0.4;
  double p_noisy = 0.2;
  std::vector<int> intermediate_rates = {8000, 16000, 22050, 32000, 44100};
  std::vector<double> snrs_db = {8.0, 10.0, 20.0};
  std::string noise_path;

  /// Loads the noise file when the noisy branch is reachable.
  AugmentPolicy ToPolicy() const;
  bool operator==(const AugmentSpec &) const = default;
};

struct RunPaths {
  std::string source_dir;
  std::string out_dir;
  std::string workdir;
  std::string manifest;
  bool operator==(const RunPaths &) const = default;
};

struct RunConfig {
  std::string profile = "paper";
  uint64_t seed = 0;
  int workers = 1;
  MelParams mel;
  ModelConfig model;
  TrainConfig train;
  AugmentSpec augment;
  SplitFractions split;
  std::vector<BackendSpec> vocoders;
  RunPaths paths;

  /// "tiny": the desk-scale model and two toy backends. "paper": the full
  /// backbone and six mel-inversion backends. Throws ConfigError otherwise.
  static RunConfig Defaults(const std::string &profile);
  bool operator==(const RunConfig &) const = default;
};

nlohmann::json ToJson(const MelParams &p);
nlohmann::json ToJson(const ModelConfig &c);
nlohmann::json ToJson(const TrainConfig &c);
nlohmann::json ToJson(const BackendSpec &s);
nlohmann::json ToJson(const RegistrySnapshot &r);
nlohmann::json ToJson(const RunConfig &c);

/// Each reader starts from `base` and overrides the keys present. Unknown
/// keys and wrongly typed values throw ConfigError.
MelParams MelParamsFromJson(const nlohmann::json &j, MelParams base = {});
ModelConfig ModelConfigFromJson(const nlohmann::json &j, ModelConfig base = {});
TrainConfig TrainConfigFromJson(const nlohmann::json &j, TrainConfig base = {});
BackendSpec BackendSpecFromJson(const nlohmann::json &j);
RegistrySnapshot RegistryFromJson(const nlohmann::json &j);
/// Starts from Defaults(j["profile"]) ("paper" when absent).
RunConfig RunConfigFromJson(const nlohmann::json &j);

/// Parses, validates and checks that source_dir, manifest and the noise
/// file exist when given. Throws ConfigError.
RunConfig LoadRunConfig(const std::filesystem::path &path);
void ValidateRunConfig(const RunConfig &c);
void SaveRunConfig(const RunConfig &c, const std::filesystem::path &path);

}  // namespace vocart

#endif  // VOCART_CONFIG_H_
