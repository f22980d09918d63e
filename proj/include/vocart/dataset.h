// include/vocart/dataset.h

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

#ifndef VOCART_DATASET_H_
#define VOCART_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "vocart/audio.h"
#include "vocart/rng.h"
#include "vocart/vocoder.h"

namespace vocart {

enum class Split { kTrain, kDev, kTest };

std::string_view SplitName(Split s);
Split ParseSplit(std::string_view s);

/// One utterance of the corpus. label 0 = real, 1 = fake; vocoder_class is 0
/// for real speech and the registry id of the synthesising vocoder otherwise.
struct UtteranceRecord {
  std::string utterance_id;
  std::string speaker_id;
  std::filesystem::path audio_path;  // relative paths resolve against the manifest
  int label = 0;
  int vocoder_class = 0;
  Split split = Split::kTrain;
  double duration = 0.0;  // seconds

  void Validate() const;
  bool operator==(const UtteranceRecord &) const = default;
};

struct Manifest {
  std::vector<UtteranceRecord> records;
  RegistrySnapshot registry;
  uint64_t build_seed = 0;
  /// Directory that relative audio paths are resolved against. Not persisted.
  std::filesystem::path base_dir;

  /// Unique ids, label/class consistency, classes known to the registry,
  /// no speaker in more than one split.
  void Validate() const;
  std::filesystem::path Resolve(const UtteranceRecord &r) const;
  std::vector<const UtteranceRecord *> InSplit(Split s) const;
  int num_classes() const { return static_cast<int>(registry.size()) + 1; }
};

/// Text form:
///   #librivoc-manifest v1
///   utterance_id<TAB>speaker_id<TAB>audio_path<TAB>label<TAB>vocoder_class<TAB>split<TAB>duration
///   ...
///   #registry {"build_seed":N,"vocoders":[{"class_id":1,"name":"..."},...]}
std::string FormatManifest(const Manifest &m);
Manifest ParseManifest(std::string_view text);
void WriteManifest(const Manifest &m, const std::filesystem::path &path);
/// base_dir of the result is the file's parent directory.
Manifest ReadManifest(const std::filesystem::path &path);

struct SpeakerAllocation {
  std::vector<std::string> real_only;
  std::vector<std::string> fake_only;
  std::vector<std::string> mixed;
};

/// Sorts, then shuffles the speakers with `seed`; the first floor(n/4) keep
/// only real speech, the next floor(n/4) are fully vocoded and the remainder
/// contribute both. Needs at least four speakers.
SpeakerAllocation AllocateSpeakers(std::vector<std::string> speakers,
                                   uint64_t seed);

struct BuildOptions {
  int workers = 1;
  PcmFormat format = PcmFormat::kPcm16;
  std::string manifest_name = "manifest.tsv";
};

struct BuildReport {
  Manifest manifest;
  std::filesystem::path manifest_path;
  std::vector<std::string> errors;  // per-utterance failures; the build goes on
  std::vector<std::string> skipped_speakers;
};

/// Builds a self-vocoded corpus from `source_dir/<speaker>/*.wav`.
///
/// Mixed speakers vocode floor(n/2) of their utterances (seeded choice, the
/// odd one stays real). Fake utterances are dealt round-robin over the
/// registry in a seeded order so vocoder classes stay balanced. Vocoded audio
/// goes to out_dir/vocoded/<vocoder>/<speaker>/; real records point at the
/// source files. All records start in the train split; see SplitManifest.
BuildReport BuildCorpus(const std::filesystem::path &source_dir,
                        const VocoderRegistry &registry, const MelParams &p,
                        uint64_t seed, const std::filesystem::path &out_dir,
                        const BuildOptions &opts = {});

struct SplitFractions {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
  bool operator==(const SplitFractions &) const = default;
};

/// Assigns whole speakers to splits. Speaker counts per split are the
/// largest-remainder apportionment of the fractions (each split gets at least
/// one). Real-only, fake-only and mixed speakers are dealt in turn so every
/// split sees every kind when counts allow.
Manifest SplitManifest(const Manifest &m, const SplitFractions &fractions,
                       uint64_t seed);

enum class AugmentBranch { kOriginal, kResampled, kNoisy };
std::string_view BranchName(AugmentBranch b);

/// Degradation protocol for robustness evaluation.
struct AugmentPolicy {
  double p_original = 0.4;
  double p_resampled = 0.4;
  double p_noisy = 0.2;
  std::vector<int> intermediate_rates = {8000, 16000, 22050, 32000, 44100};
  std::vector<double> snrs_db = {8.0, 10.0, 20.0};
  std::shared_ptr<const Waveform> noise;

  /// Throws ArgumentError for a bad distribution and ConfigError when the
  /// noisy branch is reachable without a noise recording.
  void Validate() const;
  static AugmentPolicy Identity();
};

struct AugmentResult {
  Waveform audio;
  AugmentBranch branch = AugmentBranch::kOriginal;
  double parameter = 0.0;  // intermediate rate (Hz) or SNR (dB)
};

AugmentResult AugmentForEval(const Waveform &w, const AugmentPolicy &policy,
                             Rng &rng);

/// FNV-1a; stable salt for per-speaker random streams.
uint64_t StableHash(std::string_view s);

}  // namespace vocart

#endif  // VOCART_DATASET_H_
