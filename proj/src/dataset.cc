// src/dataset.cc

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

#include "vocart/dataset.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "vocart/errors.h"

namespace vocart {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view SplitName(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kDev:
      return "dev";
    case Split::kTest:
      return "test";
  }
  return "?";
}

Split ParseSplit(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "dev") return Split::kDev;
  if (s == "test") return Split::kTest;
  throw ArgumentError("unknown split '" + std::string(s) + "'");
}

uint64_t StableHash(std::string_view s) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Records and manifests

void UtteranceRecord::Validate() const {
  if (utterance_id.empty()) throw ArgumentError("record with empty utterance id");
  if (label != 0 && label != 1)
    throw ArgumentError(utterance_id + ": label must be 0 or 1");
  if (vocoder_class < 0)
    throw ArgumentError(utterance_id + ": negative vocoder class");
  if ((label == 0) != (vocoder_class == 0))
    throw ArgumentError(utterance_id +
                        ": label 0 must coincide with vocoder class 0");
  if (!(duration > 0.0)) throw ArgumentError(utterance_id + ": duration <= 0");
}

void Manifest::Validate() const {
  ValidateSnapshot(registry);
  std::set<std::string> ids;
  std::map<std::string, Split> speaker_split;
  for (const auto &r : records) {
    r.Validate();
    if (!ids.insert(r.utterance_id).second)
      throw ArgumentError("duplicate utterance id " + r.utterance_id);
    if (r.vocoder_class > static_cast<int>(registry.size()))
      throw ArgumentError(r.utterance_id + ": vocoder class " +
                          std::to_string(r.vocoder_class) +
                          " not in registry snapshot");
    auto [it, inserted] = speaker_split.emplace(r.speaker_id, r.split);
    if (!inserted && it->second != r.split)
      throw ArgumentError("speaker " + r.speaker_id +
                          " appears in more than one split");
  }
}

fs::path Manifest::Resolve(const UtteranceRecord &r) const {
  if (r.audio_path.is_absolute() || base_dir.empty()) return r.audio_path;
  return base_dir / r.audio_path;
}

std::vector<const UtteranceRecord *> Manifest::InSplit(Split s) const {
  std::vector<const UtteranceRecord *> out;
  for (const auto &r : records)
    if (r.split == s) out.push_back(&r);
  return out;
}

namespace {

constexpr std::string_view kManifestHeader = "#librivoc-manifest v1";
constexpr std::string_view kRegistryPrefix = "#registry ";

void CheckField(const std::string &field) {
  if (field.find_first_of("\t\n\r") != std::string::npos)
    throw ArgumentError("manifest field contains a tab or newline: " + field);
}

std::vector<std::string> SplitTabs(std::string_view line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find('\t', start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string FormatManifest(const Manifest &m) {
  std::ostringstream os;
  os << kManifestHeader << '\n';
  char dur[64];
  for (const auto &r : m.records) {
    CheckField(r.utterance_id);
    CheckField(r.speaker_id);
    CheckField(r.audio_path.generic_string());
    *std::to_chars(dur, dur + sizeof dur - 1, r.duration).ptr = '\0';
    os << r.utterance_id << '\t' << r.speaker_id << '\t'
       << r.audio_path.generic_string() << '\t' << r.label << '\t'
       << r.vocoder_class << '\t' << SplitName(r.split) << '\t' << dur << '\n';
  }
  json reg = json::object();
  reg["build_seed"] = m.build_seed;
  json vocoders = json::array();
  for (const auto &e : m.registry)
    vocoders.push_back({{"class_id", e.class_id}, {"name", e.name}});
  reg["vocoders"] = vocoders;
  os << kRegistryPrefix << reg.dump() << '\n';
  return os.str();
}

Manifest ParseManifest(std::string_view text) {
  Manifest m;
  std::istringstream is{std::string(text)};
  std::string line;
  if (!std::getline(is, line) || line != kManifestHeader)
    throw FormatError("manifest: missing '#librivoc-manifest v1' header");
  bool have_registry = false;
  size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (have_registry)
      throw FormatError("manifest: content after the registry line");
    if (line.rfind(kRegistryPrefix, 0) == 0) {
      try {
        json reg = json::parse(line.substr(kRegistryPrefix.size()));
        m.build_seed = reg.at("build_seed").get<uint64_t>();
        for (const auto &v : reg.at("vocoders"))
          m.registry.push_back(
              {v.at("class_id").get<int>(), v.at("name").get<std::string>()});
      } catch (const json::exception &e) {
        throw FormatError(std::string("manifest: bad registry line: ") + e.what());
      }
      have_registry = true;
      continue;
    }
    auto f = SplitTabs(line);
    if (f.size() != 7)
      throw FormatError("manifest line " + std::to_string(line_no) +
                        ": expected 7 tab-separated fields");
    UtteranceRecord r;
    try {
      r.utterance_id = f[0];
      r.speaker_id = f[1];
      r.audio_path = f[2];
      r.label = std::stoi(f[3]);
      r.vocoder_class = std::stoi(f[4]);
      r.split = ParseSplit(f[5]);
      r.duration = std::stod(f[6]);
    } catch (const std::exception &e) {
      throw FormatError("manifest line " + std::to_string(line_no) + ": " +
                        e.what());
    }
    m.records.push_back(std::move(r));
  }
  if (!have_registry) throw FormatError("manifest: missing registry line");
  try {
    m.Validate();
  } catch (const ArgumentError &e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  return m;
}

void WriteManifest(const Manifest &m, const fs::path &path) {
  const std::string text = FormatManifest(m);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write manifest " + path.string());
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
}

Manifest ReadManifest(const fs::path &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  Manifest m = ParseManifest(ss.str());
  m.base_dir = path.parent_path();
  return m;
}

// ---------------------------------------------------------------------------
// Speaker allocation and corpus construction

SpeakerAllocation AllocateSpeakers(std::vector<std::string> speakers,
                                   uint64_t seed) {
  std::sort(speakers.begin(), speakers.end());
  if (std::adjacent_find(speakers.begin(), speakers.end()) != speakers.end())
    throw ArgumentError("duplicate speaker ids");
  if (speakers.size() < 4)
    throw ArgumentError("speaker allocation needs at least 4 speakers, got " +
                        std::to_string(speakers.size()));
  Rng rng(seed);
  rng.Shuffle(speakers);
  const size_t quarter = speakers.size() / 4;
  SpeakerAllocation a;
  a.real_only.assign(speakers.begin(), speakers.begin() + quarter);
  a.fake_only.assign(speakers.begin() + quarter, speakers.begin() + 2 * quarter);
  a.mixed.assign(speakers.begin() + 2 * quarter, speakers.end());
  return a;
}

namespace {

struct Job {
  std::string utterance_id;
  std::string speaker_id;
  fs::path source;
  int vocoder_class = 0;  // 0 = keep real
};

fs::path Absolute(const fs::path &p) { return fs::weakly_canonical(fs::absolute(p)); }

}  // namespace

BuildReport BuildCorpus(const fs::path &source_dir,
                        const VocoderRegistry &registry, const MelParams &p,
                        uint64_t seed, const fs::path &out_dir,
                        const BuildOptions &opts) {
  p.Validate();
  registry.RequireMultiClass();
  if (!fs::is_directory(source_dir))
    throw IoError("source directory not found: " + source_dir.string());

  BuildReport report;
  std::map<std::string, std::vector<fs::path>> by_speaker;
  for (const auto &entry : fs::directory_iterator(source_dir)) {
    if (!entry.is_directory()) continue;
    std::vector<fs::path> wavs;
    for (const auto &f : fs::directory_iterator(entry.path()))
      if (f.is_regular_file() && f.path().extension() == ".wav")
        wavs.push_back(f.path());
    const std::string spk = entry.path().filename().string();
    if (wavs.empty()) {
      Warn("speaker " + spk + " has no .wav files; skipped");
      report.skipped_speakers.push_back(spk);
      continue;
    }
    std::sort(wavs.begin(), wavs.end());
    by_speaker.emplace(spk, std::move(wavs));
  }
  std::sort(report.skipped_speakers.begin(), report.skipped_speakers.end());

  std::vector<std::string> speakers;
  for (const auto &[spk, _] : by_speaker) speakers.push_back(spk);
  const SpeakerAllocation alloc = AllocateSpeakers(speakers, seed);

  std::vector<Job> jobs;
  auto add = [&](const std::string &spk, const fs::path &src, bool fake) {
    jobs.push_back({spk + "/" + src.stem().string(), spk, src, fake ? -1 : 0});
  };
  for (const auto &spk : alloc.real_only)
    for (const auto &src : by_speaker[spk]) add(spk, src, false);
  for (const auto &spk : alloc.fake_only)
    for (const auto &src : by_speaker[spk]) add(spk, src, true);
  for (const auto &spk : alloc.mixed) {
    std::vector<fs::path> utts = by_speaker[spk];
    Rng rng(MixSeed(seed, StableHash(spk)));
    rng.Shuffle(utts);
    const size_t n_real = (utts.size() + 1) / 2;
    for (size_t i = 0; i < utts.size(); ++i) add(spk, utts[i], i >= n_real);
  }
  std::sort(jobs.begin(), jobs.end(),
            [](const Job &a, const Job &b) { return a.utterance_id < b.utterance_id; });

  // Round-robin over a seeded ordering of the fakes.
  std::vector<size_t> fakes;
  for (size_t i = 0; i < jobs.size(); ++i)
    if (jobs[i].vocoder_class < 0) fakes.push_back(i);
  Rng deal(MixSeed(seed, 0x766f63ULL));
  deal.Shuffle(fakes);
  const size_t n_voc = registry.size();
  for (size_t k = 0; k < fakes.size(); ++k)
    jobs[fakes[k]].vocoder_class = static_cast<int>(k % n_voc) + 1;

  fs::create_directories(out_dir);
  const fs::path out_abs = Absolute(out_dir);

  std::vector<std::optional<UtteranceRecord>> results(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
      const Job &job = jobs[i];
      try {
        Waveform w = LoadAudio(job.source);
        if (w.samples.empty()) throw FormatError("empty audio");
        UtteranceRecord r;
        r.utterance_id = job.utterance_id;
        r.speaker_id = job.speaker_id;
        r.duration = w.duration();
        if (job.vocoder_class == 0) {
          r.audio_path = fs::relative(Absolute(job.source), out_abs);
        } else {
          if (w.sample_rate != p.sample_rate)
            throw FormatError("sample rate " + std::to_string(w.sample_rate) +
                              " != analysis rate " +
                              std::to_string(p.sample_rate));
          const VocoderBackend &b = registry.backend(job.vocoder_class);
          Waveform fake = SelfVocode(w, p, b);
          const fs::path rel = fs::path("vocoded") / b.name() / job.speaker_id /
                               (job.source.stem().string() + ".wav");
          fs::create_directories((out_abs / rel).parent_path());
          SaveAudio(fake, out_abs / rel, opts.format);
          r.audio_path = rel;
          r.label = 1;
          r.vocoder_class = job.vocoder_class;
        }
        results[i] = std::move(r);
      } catch (const std::exception &e) {
        errors[i] = job.source.string() + ": " + e.what();
      }
    }
  };
  const int n_workers = std::max(1, opts.workers);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto &t : pool) t.join();
  }

  Manifest &m = report.manifest;
  m.registry = registry.Snapshot();
  m.build_seed = seed;
  m.base_dir = out_abs;
  for (size_t i = 0; i < jobs.size(); ++i) {
    if (results[i]) m.records.push_back(std::move(*results[i]));
    if (!errors[i].empty()) {
      Warn(errors[i]);
      report.errors.push_back(errors[i]);
    }
  }
  m.Validate();
  report.manifest_path = out_abs / opts.manifest_name;
  WriteManifest(m, report.manifest_path);
  return report;
}

// ---------------------------------------------------------------------------
// Splits

Manifest SplitManifest(const Manifest &m, const SplitFractions &fr,
                       uint64_t seed) {
  const double f[3] = {fr.train, fr.dev, fr.test};
  for (double v : f)
    if (!(v > 0.0)) throw ArgumentError("split fractions must be positive");
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-6)
    throw ArgumentError("split fractions must sum to 1");

  // Speaker kind: 0 real-only, 1 fake-only, 2 mixed.
  std::map<std::string, int> kind;
  for (const auto &r : m.records) {
    int bit = r.label == 0 ? 1 : 2;
    kind[r.speaker_id] |= bit;
  }
  const size_t n = kind.size();
  if (n < 3)
    throw ArgumentError("need at least 3 speakers to populate train/dev/test, got " +
                        std::to_string(n));

  // Largest-remainder apportionment, at least one speaker per split.
  size_t target[3];
  double rem[3];
  size_t assigned = 0;
  for (int s = 0; s < 3; ++s) {
    const double exact = f[s] * static_cast<double>(n);
    target[s] = static_cast<size_t>(std::floor(exact));
    rem[s] = exact - static_cast<double>(target[s]);
    assigned += target[s];
  }
  while (assigned < n) {
    int best = 0;
    for (int s = 1; s < 3; ++s)
      if (rem[s] > rem[best]) best = s;
    ++target[best];
    rem[best] = -1.0;
    ++assigned;
  }
  for (int s = 0; s < 3; ++s) {
    if (target[s] == 0) {
      int largest = 0;
      for (int t = 1; t < 3; ++t)
        if (target[t] > target[largest]) largest = t;
      if (target[largest] <= 1)
        throw ArgumentError("too few speakers to populate every split");
      --target[largest];
      ++target[s];
    }
  }

  // Speakers ordered by kind (real-only, fake-only, mixed), seeded within kind.
  std::vector<std::string> order;
  Rng rng(seed);
  for (int k : {1, 2, 3}) {
    std::vector<std::string> group;
    for (const auto &[spk, bits] : kind)
      if (bits == k) group.push_back(spk);
    rng.Shuffle(group);
    order.insert(order.end(), group.begin(), group.end());
  }

  // Deal to the split with the largest deficit against its running quota.
  std::map<std::string, Split> assignment;
  size_t count[3] = {0, 0, 0};
  for (size_t i = 0; i < order.size(); ++i) {
    int best = -1;
    double best_deficit = 0.0;
    for (int s = 0; s < 3; ++s) {
      if (count[s] >= target[s]) continue;
      const double deficit =
          static_cast<double>(target[s]) * static_cast<double>(i + 1) /
              static_cast<double>(n) -
          static_cast<double>(count[s]);
      if (best < 0 || deficit > best_deficit + 1e-12) {
        best = s;
        best_deficit = deficit;
      }
    }
    ++count[best];
    assignment[order[i]] = static_cast<Split>(best);
  }

  Manifest out = m;
  for (auto &r : out.records) r.split = assignment.at(r.speaker_id);
  out.Validate();
  return out;
}

// ---------------------------------------------------------------------------
// Augmentation

std::string_view BranchName(AugmentBranch b) {
  switch (b) {
    case AugmentBranch::kOriginal:
      return "original";
    case AugmentBranch::kResampled:
      return "resampled";
    case AugmentBranch::kNoisy:
      return "noisy";
  }
  return "?";
}

void AugmentPolicy::Validate() const {
  for (double p : {p_original, p_resampled, p_noisy})
    if (!(p >= 0.0 && p <= 1.0))
      throw ArgumentError("augmentation probabilities must lie in [0, 1]");
  if (std::abs(p_original + p_resampled + p_noisy - 1.0) > 1e-9)
    throw ArgumentError("augmentation probabilities must sum to 1");
  if (p_resampled > 0.0) {
    if (intermediate_rates.empty())
      throw ArgumentError("resample branch needs at least one rate");
    for (int r : intermediate_rates)
      if (r <= 0) throw ArgumentError("intermediate rates must be positive");
  }
  if (p_noisy > 0.0) {
    if (snrs_db.empty()) throw ArgumentError("noisy branch needs SNR values");
    if (!noise || noise->samples.empty())
      throw ConfigError("noisy augmentation branch configured without a noise recording");
  }
}

AugmentPolicy AugmentPolicy::Identity() {
  AugmentPolicy p;
  p.p_original = 1.0;
  p.p_resampled = 0.0;
  p.p_noisy = 0.0;
  return p;
}

AugmentResult AugmentForEval(const Waveform &w, const AugmentPolicy &policy,
                             Rng &rng) {
  policy.Validate();
  AugmentResult r;
  const double u = rng.Uniform();
  if (u < policy.p_original) {
    r.audio = w;
    r.branch = AugmentBranch::kOriginal;
  } else if (u < policy.p_original + policy.p_resampled ||
             policy.p_noisy == 0.0) {
    const int rate = policy.intermediate_rates[static_cast<size_t>(
        rng.Index(policy.intermediate_rates.size()))];
    r.audio = DegradeRoundtrip(w, rate);
    r.branch = AugmentBranch::kResampled;
    r.parameter = rate;
  } else {
    const double snr =
        policy.snrs_db[static_cast<size_t>(rng.Index(policy.snrs_db.size()))];
    Waveform noise = *policy.noise;
    if (noise.sample_rate != w.sample_rate) noise = Resample(noise, w.sample_rate);
    const size_t offset = static_cast<size_t>(rng.Index(noise.size()));
    r.audio = MixNoiseAtSnr(w, noise, snr, offset);
    r.branch = AugmentBranch::kNoisy;
    r.parameter = snr;
  }
  return r;
}

}  // namespace vocart
