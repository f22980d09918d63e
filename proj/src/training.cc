// src/training.cc

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

#include "vocart/training.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "vocart/checkpoint.h"
#include "vocart/errors.h"
#include "vocart/evaluation.h"
#include "vocart/parallel.h"

namespace vocart {

namespace fs = std::filesystem;
using nlohmann::json;

void TrainConfig::Validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ArgumentError("lambda must lie in [0, 1]");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ArgumentError("learning_rate must be positive");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (max_steps < 1) throw ArgumentError("max_steps must be >= 1");
  if (eval_interval < 1) throw ArgumentError("eval_interval must be >= 1");
  if (workers < 1) throw ArgumentError("workers must be >= 1");
  Adam check(learning_rate, adam);
}

JointLossResult JointLoss(const Rows &binary_logits, const Rows &vocoder_logits,
                          std::span<const int> labels,
                          std::span<const int> classes, double lambda) {
  const size_t B = binary_logits.rows;
  const size_t K = vocoder_logits.cols;
  if (binary_logits.cols != 1) throw ShapeError("binary logits must be B x 1");
  if (vocoder_logits.rows != B || labels.size() != B || classes.size() != B)
    throw ShapeError("logits, labels and classes must share the batch size");
  if (B == 0) throw ShapeError("empty batch");
  if (K < 1) throw ShapeError("vocoder logits need at least one column");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ArgumentError("lambda must lie in [0, 1]");

  JointLossResult r;
  r.d_binary = Rows(B, 1);
  r.d_vocoder = Rows(B, K);
  const double inv_b = 1.0 / static_cast<double>(B);
  double lb = 0.0, lm = 0.0;
  for (size_t i = 0; i < B; ++i) {
    const int y = labels[i];
    const int c = classes[i];
    if (y != 0 && y != 1) throw ArgumentError("labels must be 0 or 1");
    if (c < 0 || static_cast<size_t>(c) >= K)
      throw ArgumentError("vocoder class out of range");
    const double z = binary_logits.at(i, 0);
    lb += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    r.d_binary.at(i, 0) = lambda * (Sigmoid(z) - y) * inv_b;

    auto row = vocoder_logits.row(i);
    double mx = row[0];
    for (double v : row) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    lm += lse - row[c];
    for (size_t k = 0; k < K; ++k) {
      const double p = std::exp(row[k] - lse);
      r.d_vocoder.at(i, k) =
          (1.0 - lambda) * (p - (static_cast<int>(k) == c ? 1.0 : 0.0)) * inv_b;
    }
  }
  r.loss.l_binary = lb * inv_b;
  r.loss.l_mult = lm * inv_b;
  r.loss.total = lambda * r.loss.l_binary + (1.0 - lambda) * r.loss.l_mult;
  return r;
}

std::string FormatMetricsRow(const MetricsRow &r) {
  json j;
  j["step"] = r.step;
  j["total"] = r.loss.total;
  j["l_binary"] = r.loss.l_binary;
  j["l_mult"] = r.loss.l_mult;
  j["dev_eer"] = r.dev_eer ? json(*r.dev_eer) : json(nullptr);
  j["wall_time"] = r.wall_time;
  return j.dump();
}

MetricsRow ParseMetricsRow(const std::string &line) {
  MetricsRow r;
  try {
    const json j = json::parse(line);
    r.step = j.at("step").get<long>();
    r.loss.total = j.at("total").get<double>();
    r.loss.l_binary = j.at("l_binary").get<double>();
    r.loss.l_mult = j.at("l_mult").get<double>();
    if (!j.at("dev_eer").is_null()) r.dev_eer = j["dev_eer"].get<double>();
    r.wall_time = j.at("wall_time").get<double>();
  } catch (const json::exception &e) {
    throw FormatError(std::string("bad metrics line: ") + e.what());
  }
  return r;
}

std::vector<MetricsRow> ReadMetrics(const fs::path &path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path.string());
  std::vector<MetricsRow> rows;
  std::string line;
  while (std::getline(f, line))
    if (!line.empty()) rows.push_back(ParseMetricsRow(line));
  return rows;
}

namespace {

struct TrainItem {
  Waveform audio;
  int label;
  int vocoder_class;
};

std::vector<TrainItem> LoadSplit(const Manifest &m, Split split, int rate,
                                 int workers) {
  const auto recs = m.InSplit(split);
  std::vector<TrainItem> items(recs.size());
  ParallelFor(recs.size(), workers, [&](size_t i) {
    Waveform w = LoadAudio(m.Resolve(*recs[i]));
    if (w.sample_rate != rate) w = Resample(w, rate);
    items[i] = {std::move(w), recs[i]->label, recs[i]->vocoder_class};
  });
  return items;
}

bool Finite(const LossValues &l) {
  return std::isfinite(l.total) && std::isfinite(l.l_binary) &&
         std::isfinite(l.l_mult);
}

}  // namespace

TrainState Train(const Manifest &manifest, const ModelConfig &mcfg,
                 const TrainConfig &tcfg, const fs::path &workdir,
                 const TrainOptions &opts) {
  tcfg.Validate();
  mcfg.Validate();
  if (tcfg.augment_train) {
    if (!opts.augment)
      throw ConfigError("augment_train is set but no augmentation policy given");
    opts.augment->Validate();
  }
  if (mcfg.num_vocoder_classes != manifest.num_classes())
    throw ConfigError("model has " + std::to_string(mcfg.num_vocoder_classes) +
                      " vocoder classes, manifest has " +
                      std::to_string(manifest.num_classes()));
  if (manifest.InSplit(Split::kTrain).empty())
    throw ConfigError("manifest has no train records");
  if (manifest.InSplit(Split::kDev).empty())
    throw ConfigError("manifest has no dev records");
  bool has_label[2] = {false, false};
  for (const auto *r : manifest.InSplit(Split::kTrain)) has_label[r->label] = true;
  if (!has_label[0] || !has_label[1])
    throw ConfigError("train split must contain both real and fake records");

  std::error_code ec;
  fs::create_directories(workdir, ec);
  if (ec) throw IoError("cannot create " + workdir.string() + ": " + ec.message());

  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<TrainItem> items =
      LoadSplit(manifest, Split::kTrain, mcfg.sample_rate, tcfg.workers);

  TrainState st{DetectorModel(mcfg), DetectorModel(mcfg), {}, 0, 0,
                std::numeric_limits<double>::infinity(), {},
                workdir / "metrics.jsonl", workdir / "last.ckpt",
                workdir / "best.ckpt"};
  Adam adam(tcfg.learning_rate, tcfg.adam);
  const RegistrySnapshot &registry = manifest.registry;
  auto snapshot = [&] {
    return OptimizerSnapshot{tcfg.learning_rate, tcfg.adam, adam.state()};
  };

  std::ofstream log(st.metrics_path, std::ios::binary | std::ios::trunc);
  if (!log) throw IoError("cannot write " + st.metrics_path.string());

  Rng rng(MixSeed(tcfg.seed, 0x7a1a));
  std::vector<size_t> order(items.size());
  size_t cursor = order.size();
  const size_t B = static_cast<size_t>(tcfg.batch_size);
  const size_t len = static_cast<size_t>(mcfg.input_length);
  const double lambda = tcfg.binary_only ? 1.0 : tcfg.lambda;
  ScoreOptions score_opts;
  score_opts.workers = tcfg.workers;

  Batch batch(B, len);
  std::vector<int> labels(B), classes(B);
  for (long step = 1; step <= tcfg.max_steps; ++step) {
    for (size_t i = 0; i < B; ++i) {
      if (cursor == order.size()) {
        for (size_t k = 0; k < order.size(); ++k) order[k] = k;
        rng.Shuffle(order);
        cursor = 0;
      }
      const TrainItem &it = items[order[cursor++]];
      Waveform w;
      if (tcfg.augment_train)
        w = FixLength(AugmentForEval(it.audio, *opts.augment, rng).audio, len,
                      FixMode::kCropRandom, &rng);
      else
        w = FixLength(it.audio, len, FixMode::kCropRandom, &rng);
      std::copy(w.samples.begin(), w.samples.end(), batch.row(i).begin());
      labels[i] = it.label;
      classes[i] = it.vocoder_class;
    }

    ForwardTape tape;
    const ModelOutput out = st.model.ForwardTrain(batch, tape);
    JointLossResult jl = JointLoss(out.binary, out.vocoder, labels, classes, lambda);
    if (!Finite(jl.loss)) {
      SaveCheckpoint(workdir / "diverged.ckpt", st.model, registry, nullptr,
                     step, -1.0);
      throw TrainingError("non-finite loss at step " + std::to_string(step) +
                          "; state saved to " +
                          (workdir / "diverged.ckpt").string());
    }
    st.model.ZeroGrad();
    st.model.Backward(tape, jl.d_binary,
                      tcfg.binary_only ? Rows() : jl.d_vocoder);
    adam.Step(st.model.parameters());
    st.step = step;

    MetricsRow row;
    row.step = step;
    row.loss = jl.loss;
    if (step % tcfg.eval_interval == 0 || step == tcfg.max_steps) {
      const ScoreSet dev = ScoreManifest(st.model, registry, manifest,
                                         Split::kDev, nullptr, tcfg.seed,
                                         score_opts);
      bool both = false, seen[2] = {false, false};
      for (const auto &e : dev.entries) seen[e.label] = true;
      both = seen[0] && seen[1];
      if (both) {
        row.dev_eer = ComputeEer(dev).eer;
        if (*row.dev_eer < st.best_dev_eer) {
          st.best_dev_eer = *row.dev_eer;
          st.best_step = step;
          st.best_model = st.model;
          SaveCheckpoint(st.best_checkpoint, st.model, registry, nullptr, step,
                         st.best_dev_eer);
        }
      }
    }
    row.wall_time = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t0).count();
    log << FormatMetricsRow(row) << '\n';
    log.flush();
    st.history.push_back(row);
    if (opts.on_step) opts.on_step(row);
  }
  if (st.best_step == 0) {
    // dev split never held both labels; fall back to the final parameters
    Warn("dev split lacks one label; best checkpoint is the last step");
    st.best_model = st.model;
    st.best_step = st.step;
    SaveCheckpoint(st.best_checkpoint, st.model, registry, nullptr, st.step, -1.0);
  }
  st.optimizer = adam.state();
  const OptimizerSnapshot snap = snapshot();
  SaveCheckpoint(st.last_checkpoint, st.model, registry, &snap, st.step,
                 st.history.back().dev_eer.value_or(-1.0));
  return st;
}

std::vector<AblationRow> RunLambdaAblation(const Manifest &manifest,
                                           const ModelConfig &mcfg,
                                           const TrainConfig &tmpl,
                                           const std::vector<double> &lambdas,
                                           const fs::path &workdir,
                                           const TrainOptions &opts) {
  if (lambdas.empty()) throw ArgumentError("no lambda values given");
  for (double l : lambdas)
    if (!(l >= 0.0 && l <= 1.0)) throw ArgumentError("lambda must lie in [0, 1]");
  if (manifest.InSplit(Split::kTest).empty())
    throw ConfigError("manifest has no test records");
  std::vector<AblationRow> rows;
  for (double l : lambdas) {
    TrainConfig t = tmpl;
    t.lambda = l;
    char dir[64];
    std::snprintf(dir, sizeof(dir), "lambda-%g", l);
    TrainState st = Train(manifest, mcfg, t, workdir / dir, opts);
    ScoreOptions so;
    so.workers = t.workers;
    const ScoreSet test = ScoreManifest(st.best_model, manifest.registry,
                                        manifest, Split::kTest, nullptr, t.seed, so);
    rows.push_back({l, ComputeEer(test).eer});
    WriteAblationTable(rows, workdir / "ablation.tsv");
  }
  return rows;
}

void WriteAblationTable(const std::vector<AblationRow> &rows,
                        const fs::path &path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << "lambda\ttest_eer\n";
  char buf[96];
  for (const auto &r : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g\t%.17g\n", r.lambda, r.test_eer);
    f << buf;
  }
  if (!f) throw IoError("write failed: " + path.string());
}

std::vector<AblationRow> ReadAblationTable(const fs::path &path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(f, line) || line != "lambda\ttest_eer")
    throw FormatError(path.string() + ": missing 'lambda<TAB>test_eer' header");
  std::vector<AblationRow> rows;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    char *e1 = nullptr, *e2 = nullptr;
    AblationRow r;
    if (tab != std::string::npos) {
      const std::string a = line.substr(0, tab), b = line.substr(tab + 1);
      r.lambda = std::strtod(a.c_str(), &e1);
      r.test_eer = std::strtod(b.c_str(), &e2);
      if (!a.empty() && !b.empty() && *e1 == '\0' && *e2 == '\0') {
        rows.push_back(r);
        continue;
      }
    }
    throw FormatError(path.string() + ":" + std::to_string(lineno) +
                      ": expected two numbers");
  }
  return rows;
}

}  // namespace vocart
