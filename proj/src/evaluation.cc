// src/evaluation.cc

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

#include "vocart/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "vocart/errors.h"
#include "vocart/parallel.h"

namespace vocart {

namespace fs = std::filesystem;

namespace {

void CheckScoreSet(const ScoreSet &s) {
  size_t n_real = 0, n_fake = 0;
  for (const auto &e : s.entries) {
    if (!std::isfinite(e.score))
      throw ArgumentError("non-finite score for " + e.utterance_id);
    if (e.label == 0)
      ++n_real;
    else if (e.label == 1)
      ++n_fake;
    else
      throw ArgumentError("label must be 0 or 1 for " + e.utterance_id);
  }
  if (n_real == 0 || n_fake == 0)
    throw ArgumentError("EER needs at least one real and one fake score");
}

std::vector<std::string> SplitTabs(const std::string &line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) out.push_back(field);
  if (!line.empty() && line.back() == '\t') out.emplace_back();
  return out;
}

long ParseLong(const std::string &s, const std::string &what) {
  size_t used = 0;
  long v = 0;
  try {
    v = std::stol(s, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used == 0 || used != s.size())
    throw FormatError("bad integer '" + s + "' in " + what);
  return v;
}

}  // namespace

std::vector<DetPoint> DetCurve(const ScoreSet &s) {
  CheckScoreSet(s);
  std::vector<std::pair<double, int>> v;
  v.reserve(s.entries.size());
  double n_real = 0, n_fake = 0;
  for (const auto &e : s.entries) {
    v.emplace_back(e.score, e.label);
    (e.label == 0 ? n_real : n_fake) += 1;
  }
  std::sort(v.begin(), v.end());
  std::vector<DetPoint> curve;
  size_t real_below = 0, fake_below = 0;
  size_t i = 0;
  while (i < v.size()) {
    const double t = v[i].first;
    curve.push_back({t, 1.0 - real_below / n_real, fake_below / n_fake});
    for (; i < v.size() && v[i].first == t; ++i)
      ++(v[i].second == 0 ? real_below : fake_below);
  }
  curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 1.0});
  return curve;
}

EerResult ComputeEer(const ScoreSet &s) {
  const std::vector<DetPoint> c = DetCurve(s);
  size_t i = 1;
  while (c[i].far - c[i].frr > 0) ++i;
  const DetPoint &a = c[i - 1], &b = c[i];
  const double d0 = a.far - a.frr, d1 = b.far - b.frr;
  const double alpha = d0 / (d0 - d1);
  EerResult r;
  r.eer = a.far + alpha * (b.far - a.far);
  if (std::isinf(b.threshold))
    r.threshold = std::nextafter(a.threshold, b.threshold);
  else
    r.threshold = a.threshold + alpha * (b.threshold - a.threshold);
  return r;
}

long ConfusionMatrix::RowSum(int t) const {
  long s = 0;
  for (int p = 0; p < num_classes; ++p) s += at(t, p);
  return s;
}

long ConfusionMatrix::Total() const {
  long s = 0;
  for (long v : counts) s += v;
  return s;
}

std::vector<double> ConfusionMatrix::Rates() const {
  std::vector<double> r(counts.size(), 0.0);
  for (int t = 0; t < num_classes; ++t) {
    const long n = RowSum(t);
    if (n == 0) continue;
    for (int p = 0; p < num_classes; ++p)
      r[t * num_classes + p] = static_cast<double>(at(t, p)) / n;
  }
  return r;
}

double ConfusionMatrix::Accuracy() const {
  const long n = Total();
  if (n == 0) return 0.0;
  long d = 0;
  for (int t = 0; t < num_classes; ++t) d += at(t, t);
  return static_cast<double>(d) / n;
}

std::vector<double> ConfusionMatrix::PerClassAccuracy() const {
  const std::vector<double> r = Rates();
  std::vector<double> out(num_classes);
  for (int t = 0; t < num_classes; ++t) out[t] = r[t * num_classes + t];
  return out;
}

ConfusionMatrix ComputeConfusion(const ScoreSet &s, int num_classes) {
  if (num_classes < 1) throw ArgumentError("confusion matrix needs classes");
  ConfusionMatrix cm(num_classes);
  for (const auto &e : s.entries) {
    if (e.pred_class < 0)
      throw ArgumentError("missing vocoder prediction for " + e.utterance_id);
    if (e.pred_class >= num_classes || e.true_class < 0 ||
        e.true_class >= num_classes)
      throw ArgumentError("class out of range for " + e.utterance_id);
    ++cm.at(e.true_class, e.pred_class);
  }
  return cm;
}

std::vector<std::string> ClassNames(const RegistrySnapshot &registry) {
  std::vector<std::string> names = {"real"};
  for (const auto &e : registry) names.push_back(e.name);
  return names;
}

ScoreSet ScoreManifest(const DetectorModel &model,
                       const RegistrySnapshot &model_registry,
                       const Manifest &manifest, Split split,
                       const AugmentPolicy *augment, uint64_t seed,
                       const ScoreOptions &opts) {
  if (model_registry != manifest.registry)
    throw ConfigError(
        "checkpoint and manifest disagree on the vocoder class mapping");
  const ModelConfig &cfg = model.config();
  if (cfg.num_vocoder_classes != manifest.num_classes())
    throw ConfigError("model has " + std::to_string(cfg.num_vocoder_classes) +
                      " vocoder classes, manifest has " +
                      std::to_string(manifest.num_classes()));
  if (augment) augment->Validate();

  const std::vector<const UtteranceRecord *> recs = manifest.InSplit(split);
  ScoreSet out;
  out.entries.resize(recs.size());
  std::vector<int> branch(recs.size(), -1);
  const size_t bs = static_cast<size_t>(std::max(1, opts.batch_size));
  const size_t n_chunks = (recs.size() + bs - 1) / bs;
  const size_t len = static_cast<size_t>(cfg.input_length);

  ParallelFor(n_chunks, opts.workers, [&](size_t chunk) {
    const size_t lo = chunk * bs, hi = std::min(recs.size(), lo + bs);
    Batch batch(hi - lo, len);
    for (size_t i = lo; i < hi; ++i) {
      const UtteranceRecord &r = *recs[i];
      Waveform w = LoadAudio(manifest.Resolve(r));
      if (w.sample_rate != cfg.sample_rate) w = Resample(w, cfg.sample_rate);
      if (augment) {
        Rng rng(MixSeed(seed, StableHash(r.utterance_id)));
        AugmentResult a = AugmentForEval(w, *augment, rng);
        w = std::move(a.audio);
        branch[i] = static_cast<int>(a.branch);
      }
      w = FixLength(w, len, FixMode::kCropCenter);
      std::copy(w.samples.begin(), w.samples.end(), batch.row(i - lo).begin());
    }
    const ModelOutput o = model.Forward(batch);
    for (size_t i = lo; i < hi; ++i) {
      const UtteranceRecord &r = *recs[i];
      ScoreEntry &e = out.entries[i];
      e.utterance_id = r.utterance_id;
      e.label = r.label;
      e.true_class = r.vocoder_class;
      e.score = Sigmoid(o.binary.at(i - lo, 0));
      auto row = o.vocoder.row(i - lo);
      e.pred_class =
          static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
  });
  if (augment) {
    for (auto b : {AugmentBranch::kOriginal, AugmentBranch::kResampled,
                   AugmentBranch::kNoisy})
      out.branch_counts[std::string(BranchName(b))] = 0;
    for (int b : branch)
      ++out.branch_counts[std::string(BranchName(static_cast<AugmentBranch>(b)))];
  }
  return out;
}

void WriteScores(const ScoreSet &s, const fs::path &path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << "#utterance_id\tscore\tlabel\ttrue_class\tpred_class\n";
  char buf[64];
  for (const auto &e : s.entries) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.score);
    f << e.utterance_id << '\t' << buf << '\t' << e.label << '\t'
      << e.true_class << '\t' << e.pred_class << '\n';
  }
  if (!f) throw IoError("write failed: " + path.string());
}

ScoreSet ReadScores(const fs::path &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  ScoreSet s;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = SplitTabs(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (fields.size() != 5)
      throw FormatError("expected 5 fields at " + where);
    ScoreEntry e;
    e.utterance_id = fields[0];
    char *end = nullptr;
    e.score = std::strtod(fields[1].c_str(), &end);
    if (fields[1].empty() || *end != '\0')
      throw FormatError("bad score at " + where);
    e.label = static_cast<int>(ParseLong(fields[2], where));
    e.true_class = static_cast<int>(ParseLong(fields[3], where));
    e.pred_class = static_cast<int>(ParseLong(fields[4], where));
    s.entries.push_back(std::move(e));
  }
  return s;
}

void WriteConfusion(const ConfusionMatrix &cm,
                    const std::vector<std::string> &class_names,
                    const fs::path &path) {
  if (class_names.size() != static_cast<size_t>(cm.num_classes))
    throw ArgumentError("one name per confusion class required");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << "true\\pred";
  for (const auto &n : class_names) f << '\t' << n;
  f << '\n';
  for (int t = 0; t < cm.num_classes; ++t) {
    f << class_names[t];
    for (int p = 0; p < cm.num_classes; ++p) f << '\t' << cm.at(t, p);
    f << '\n';
  }
  if (!f) throw IoError("write failed: " + path.string());
}

ConfusionMatrix ReadConfusion(const fs::path &path,
                              std::vector<std::string> *class_names) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(f, line)) throw FormatError("empty confusion file");
  auto header = SplitTabs(line);
  if (header.size() < 2 || header[0] != "true\\pred")
    throw FormatError("confusion file lacks its header row");
  const int n = static_cast<int>(header.size()) - 1;
  ConfusionMatrix cm(n);
  std::vector<std::string> names(header.begin() + 1, header.end());
  for (int t = 0; t < n; ++t) {
    if (!std::getline(f, line))
      throw FormatError("confusion file has too few rows");
    auto fields = SplitTabs(line);
    if (static_cast<int>(fields.size()) != n + 1 || fields[0] != names[t])
      throw FormatError("malformed confusion row " + std::to_string(t + 1));
    for (int p = 0; p < n; ++p) {
      cm.at(t, p) = ParseLong(fields[p + 1], path.string());
      if (cm.at(t, p) < 0) throw FormatError("negative confusion count");
    }
  }
  if (class_names) *class_names = std::move(names);
  return cm;
}

}  // namespace vocart
