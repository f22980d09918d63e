// tools/vocart.cc

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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vocart/audio.h"
#include "vocart/checkpoint.h"
#include "vocart/config.h"
#include "vocart/dataset.h"
#include "vocart/errors.h"
#include "vocart/evaluation.h"
#include "vocart/plot.h"
#include "vocart/toy.h"
#include "vocart/training.h"
#include "vocart/vocoder.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vocart {
namespace {

enum ExitCode { kOk = 0, kRuntime = 1, kUsage = 2 };

// Options shared by every subcommand.
struct GlobalOptions {
  std::string config_path;
  std::string profile;
  std::optional<int> workers;
  std::optional<uint64_t> seed;
};

std::optional<int> EnvInt(const char *name) {
  const char *v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  try {
    size_t used = 0;
    int n = std::stoi(v, &used);
    if (used != std::string(v).size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception &) {
    throw ConfigError(std::string(name) + ": not an integer: " + v);
  }
}

// Config file (or profile defaults), then environment, then flags.
RunConfig ResolveConfig(const GlobalOptions &g) {
  RunConfig c;
  if (!g.config_path.empty()) {
    c = LoadRunConfig(g.config_path);
    if (!g.profile.empty() && g.profile != c.profile)
      throw ConfigError("--profile " + g.profile + " conflicts with config profile " +
                        c.profile);
  } else {
    c = RunConfig::Defaults(g.profile.empty() ? "paper" : g.profile);
  }
  if (const char *w = std::getenv("VOCART_WORKDIR"); w != nullptr && *w != '\0')
    c.paths.workdir = w;
  if (auto w = EnvInt("VOCART_WORKERS")) c.workers = *w;
  if (g.workers) c.workers = *g.workers;
  if (g.seed) {
    c.seed = *g.seed;
    c.model.seed = *g.seed;
    c.train.seed = *g.seed;
  }
  c.train.workers = c.workers;
  ValidateRunConfig(c);
  return c;
}

void EchoConfig(const RunConfig &c, const fs::path &dir) {
  fs::create_directories(dir);
  SaveRunConfig(c, dir / "config.json");
}

std::string Pick(const std::string &flag, const std::string &from_config,
                 const char *what) {
  if (!flag.empty()) return flag;
  if (!from_config.empty()) return from_config;
  throw ConfigError(std::string("no ") + what + " given (flag or config paths)");
}

void PrintClassCounts(const Manifest &m) {
  std::vector<std::string> names = ClassNames(m.registry);
  std::map<Split, std::vector<long>> counts;
  for (const UtteranceRecord &r : m.records) {
    auto &row = counts[r.split];
    row.resize(names.size(), 0);
    ++row[r.vocoder_class];
  }
  std::printf("%-8s", "split");
  for (const std::string &n : names) std::printf(" %12s", n.c_str());
  std::printf("\n");
  for (auto &[split, row] : counts) {
    std::printf("%-8s", std::string(SplitName(split)).c_str());
    for (long v : row) std::printf(" %12ld", v);
    std::printf("\n");
  }
}

// ---------------------------------------------------------------- make-toy

struct MakeToyArgs {
  std::string out;
  std::string noise;
  int speakers = 4;
  int utterances = 10;
  double noise_seconds = 10.0;
  int sample_rate = 24000;
};

int CmdMakeToy(const GlobalOptions &g, const MakeToyArgs &a) {
  RunConfig c = ResolveConfig(g);
  ToyCorpusOptions o;
  o.speakers = a.speakers;
  o.utterances_per_speaker = a.utterances;
  o.sample_rate = a.sample_rate;
  o.seed = c.seed;
  std::vector<fs::path> files = WriteToyCorpus(a.out, o);
  std::printf("wrote %zu utterances of %d speakers to %s\n", files.size(),
              a.speakers, a.out.c_str());
  if (!a.noise.empty()) {
    Waveform n = BabbleNoise(a.noise_seconds, a.sample_rate, c.seed + 1);
    if (fs::path(a.noise).has_parent_path())
      fs::create_directories(fs::path(a.noise).parent_path());
    SaveAudio(n, a.noise);
    std::printf("wrote noise %s\n", a.noise.c_str());
  }
  return kOk;
}

// ---------------------------------------------------------------- build

struct BuildArgs {
  std::string source;
  std::string out;
};

int CmdBuild(const GlobalOptions &g, const BuildArgs &a) {
  RunConfig c = ResolveConfig(g);
  c.paths.source_dir = Pick(a.source, c.paths.source_dir, "source directory");
  c.paths.out_dir = Pick(a.out, c.paths.out_dir, "output directory");
  if (!fs::is_directory(c.paths.source_dir))
    throw IoError("source directory not found: " + c.paths.source_dir);

  const fs::path out = c.paths.out_dir;
  const fs::path manifest_path = out / "manifest.tsv";
  fs::remove(manifest_path);

  VocoderRegistry registry = VocoderRegistry::FromSpecs(c.vocoders, c.mel);
  BuildOptions bo;
  bo.workers = c.workers;
  BuildReport report =
      BuildCorpus(c.paths.source_dir, registry, c.mel, c.seed, out, bo);
  for (const std::string &s : report.skipped_speakers)
    std::fprintf(stderr, "skipped speaker %s\n", s.c_str());
  if (!report.errors.empty()) {
    for (const std::string &e : report.errors)
      std::fprintf(stderr, "error: %s\n", e.c_str());
    fs::remove(report.manifest_path);
    std::fprintf(stderr, "build failed with %zu errors; no manifest written\n",
                 report.errors.size());
    return kRuntime;
  }
  Manifest m = SplitManifest(report.manifest, c.split, c.seed);
  WriteManifest(m, manifest_path);
  c.paths.manifest = manifest_path.string();
  EchoConfig(c, out);

  long fake = 0;
  for (const UtteranceRecord &r : m.records) fake += r.label;
  std::printf("%zu records (%ld fake) -> %s\n", m.records.size(), fake,
              manifest_path.c_str());
  PrintClassCounts(m);
  return kOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string manifest;
  std::string workdir;
  std::optional<double> lambda;
  std::optional<double> lr;
  std::optional<int> batch_size;
  std::optional<long> steps;
  std::optional<long> eval_interval;
  bool binary_only = false;
  bool augment_train = false;
  bool quiet = false;
};

void ApplyTrainOverrides(const TrainArgs &a, RunConfig *c) {
  if (a.lambda) c->train.lambda = *a.lambda;
  if (a.lr) c->train.learning_rate = *a.lr;
  if (a.batch_size) c->train.batch_size = *a.batch_size;
  if (a.steps) c->train.max_steps = *a.steps;
  if (a.eval_interval) c->train.eval_interval = *a.eval_interval;
  if (a.binary_only) c->train.binary_only = true;
  if (a.augment_train) c->train.augment_train = true;
  c->train.Validate();
}

int CmdTrain(const GlobalOptions &g, const TrainArgs &a) {
  RunConfig c = ResolveConfig(g);
  ApplyTrainOverrides(a, &c);
  c.paths.manifest = Pick(a.manifest, c.paths.manifest, "manifest");
  c.paths.workdir = Pick(a.workdir, c.paths.workdir, "workdir");
  Manifest m = ReadManifest(c.paths.manifest);
  EchoConfig(c, c.paths.workdir);

  AugmentPolicy policy;
  TrainOptions opts;
  if (c.train.augment_train) {
    policy = c.augment.ToPolicy();
    opts.augment = &policy;
  }
  if (!a.quiet) {
    opts.on_step = [](const MetricsRow &r) {
      if (!r.dev_eer) return;
      std::printf("step %ld  total %.4f  binary %.4f  mult %.4f  dev_eer %.4f\n",
                  r.step, r.loss.total, r.loss.l_binary, r.loss.l_mult,
                  *r.dev_eer);
      std::fflush(stdout);
    };
  }
  TrainState st = Train(m, c.model, c.train, c.paths.workdir, opts);
  std::printf("best dev EER %.4f at step %ld\n", st.best_dev_eer, st.best_step);
  std::printf("best %s\nlast %s\nmetrics %s\n", st.best_checkpoint.c_str(),
              st.last_checkpoint.c_str(), st.metrics_path.c_str());
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint;
  std::string manifest;
  std::string out;
  std::string split = "test";
  std::string noise;
  bool augment = false;
};

int CmdEval(const GlobalOptions &g, const EvalArgs &a) {
  RunConfig c = ResolveConfig(g);
  c.paths.manifest = Pick(a.manifest, c.paths.manifest, "manifest");
  if (!a.noise.empty()) c.augment.noise_path = a.noise;
  const fs::path out = Pick(a.out, c.paths.workdir, "output directory");
  const Split split = ParseSplit(a.split);

  Checkpoint ck = LoadCheckpoint(a.checkpoint);
  Manifest m = ReadManifest(c.paths.manifest);
  AugmentPolicy policy;
  if (a.augment) policy = c.augment.ToPolicy();
  ScoreOptions so;
  so.workers = c.workers;
  ScoreSet s = ScoreManifest(ck.model, ck.registry, m, split,
                             a.augment ? &policy : nullptr, c.seed, so);
  EchoConfig(c, out);

  const std::vector<std::string> names = ClassNames(ck.registry);
  const EerResult eer = ComputeEer(s);
  const ConfusionMatrix cm =
      ComputeConfusion(s, static_cast<int>(names.size()));
  const std::vector<double> per_class = cm.PerClassAccuracy();

  WriteScores(s, out / "scores.tsv");
  WriteConfusion(cm, names, out / "confusion.tsv");
  json summary;
  summary["checkpoint"] = a.checkpoint;
  summary["split"] = a.split;
  summary["augment"] = a.augment;
  summary["seed"] = c.seed;
  summary["num_utterances"] = s.entries.size();
  summary["eer"] = eer.eer;
  summary["threshold"] = eer.threshold;
  summary["vocoder_accuracy"] = cm.Accuracy();
  json pc = json::object();
  for (size_t i = 0; i < names.size(); ++i) pc[names[i]] = per_class[i];
  summary["per_class_accuracy"] = pc;
  summary["branch_counts"] = s.branch_counts;
  std::ofstream f(out / "summary.json");
  f << summary.dump(2) << "\n";
  if (!f) throw IoError("cannot write " + (out / "summary.json").string());

  std::printf("EER %.4f (threshold %.6g) on %zu %s utterances\n", eer.eer,
              eer.threshold, s.entries.size(), a.split.c_str());
  std::printf("vocoder accuracy %.4f\n", cm.Accuracy());
  for (auto &[branch, n] : s.branch_counts)
    std::printf("branch %-10s %ld\n", branch.c_str(), n);
  return kOk;
}

// ---------------------------------------------------------------- ablate

struct AblateArgs {
  std::string manifest;
  std::string workdir;
  std::vector<double> lambdas;
  std::optional<long> steps;
};

int CmdAblate(const GlobalOptions &g, const AblateArgs &a) {
  RunConfig c = ResolveConfig(g);
  if (a.steps) c.train.max_steps = *a.steps;
  c.train.Validate();
  c.paths.manifest = Pick(a.manifest, c.paths.manifest, "manifest");
  c.paths.workdir = Pick(a.workdir, c.paths.workdir, "workdir");
  std::vector<double> lambdas = a.lambdas;
  if (lambdas.empty())
    for (int i = 10; i >= 1; --i) lambdas.push_back(i / 10.0);
  for (double l : lambdas)
    if (!(l >= 0.0 && l <= 1.0))
      throw ArgumentError("lambda outside [0, 1]: " + std::to_string(l));

  Manifest m = ReadManifest(c.paths.manifest);
  EchoConfig(c, c.paths.workdir);
  std::vector<AblationRow> rows =
      RunLambdaAblation(m, c.model, c.train, lambdas, c.paths.workdir);
  for (const AblationRow &r : rows)
    std::printf("lambda %.2f  test EER %.4f\n", r.lambda, r.test_eer);
  std::printf("table %s\n", (fs::path(c.paths.workdir) / "ablation.tsv").c_str());
  return kOk;
}

// ---------------------------------------------------------------- plot

struct PlotArgs {
  std::string kind;
  std::string input;
  std::string vocoded;
  std::string vocoder;
  std::string out;
};

int CmdPlot(const GlobalOptions &g, const PlotArgs &a) {
  if (a.kind == "confusion") {
    std::vector<std::string> names;
    ConfusionMatrix cm = ReadConfusion(a.input, &names);
    PlotConfusion(cm, names, a.out);
  } else if (a.kind == "det") {
    PlotDet(ReadScores(a.input), a.out);
  } else if (a.kind == "ablation") {
    PlotAblation(ReadAblationTable(a.input), a.out);
  } else if (a.kind == "specdiff") {
    RunConfig c = ResolveConfig(g);
    Waveform w = LoadAudio(a.input);
    if (w.sample_rate != c.mel.sample_rate) w = Resample(w, c.mel.sample_rate);
    Waveform v;
    std::string title;
    if (!a.vocoded.empty()) {
      if (!a.vocoder.empty())
        throw ArgumentError("give either --vocoded or --vocoder, not both");
      v = LoadAudio(a.vocoded);
      if (v.sample_rate != c.mel.sample_rate) v = Resample(v, c.mel.sample_rate);
      title = fs::path(a.vocoded).filename().string();
    } else {
      VocoderRegistry reg = VocoderRegistry::FromSpecs(c.vocoders, c.mel);
      const std::string name =
          a.vocoder.empty() ? reg.backend(1).name() : a.vocoder;
      v = SelfVocode(w, c.mel, reg.backend(reg.ClassOf(name)));
      title = name;
    }
    MelSpectrogram mo = ComputeMelSpectrogram(w, c.mel);
    MelSpectrogram mv = ComputeMelSpectrogram(v, c.mel);
    MelResidual res = SpectrogramDifference(w, v, c.mel);
    PlotSpecDiff(mo, mv, res, title, a.out);
    std::printf("mean |residual| %.6f\n", res.MeanAbs());
  } else {
    throw ArgumentError("unknown plot kind '" + a.kind + "'");
  }
  std::printf("wrote %s\n", a.out.c_str());
  return kOk;
}

}  // namespace
}  // namespace vocart

int main(int argc, char **argv) {
  using namespace vocart;
  CLI::App app{"vocart: self-vocoded corpora and cascade deepfake detection"};
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--config", g.config_path, "JSON run configuration");
  app.add_option("--profile", g.profile, "tiny or paper (default paper)")
      ->check(CLI::IsMember({"tiny", "paper"}));
  app.add_option("--workers", g.workers, "worker threads (env VOCART_WORKERS)")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "seed for every random stream");

  MakeToyArgs toy;
  CLI::App *c_toy = app.add_subcommand("make-toy", "write a synthetic toy corpus");
  c_toy->add_option("--out", toy.out, "corpus directory")->required();
  c_toy->add_option("--noise", toy.noise, "also write a babble noise WAV here");
  c_toy->add_option("--speakers", toy.speakers)->check(CLI::PositiveNumber);
  c_toy->add_option("--utterances", toy.utterances, "per speaker")
      ->check(CLI::PositiveNumber);
  c_toy->add_option("--noise-seconds", toy.noise_seconds)
      ->check(CLI::PositiveNumber);
  c_toy->add_option("--sample-rate", toy.sample_rate)->check(CLI::PositiveNumber);

  BuildArgs build;
  CLI::App *c_build = app.add_subcommand("build", "self-vocode a corpus and split it");
  c_build->add_option("--source", build.source, "source_dir/<speaker>/*.wav");
  c_build->add_option("--out", build.out, "output directory");

  TrainArgs train;
  CLI::App *c_train = app.add_subcommand("train", "train the detector");
  c_train->add_option("--manifest", train.manifest);
  c_train->add_option("--workdir", train.workdir, "env VOCART_WORKDIR");
  c_train->add_option("--lambda", train.lambda, "binary loss weight");
  c_train->add_option("--lr", train.lr);
  c_train->add_option("--batch-size", train.batch_size);
  c_train->add_option("--steps", train.steps);
  c_train->add_option("--eval-interval", train.eval_interval);
  c_train->add_flag("--binary-only", train.binary_only);
  c_train->add_flag("--augment-train", train.augment_train);
  c_train->add_flag("--quiet", train.quiet);

  EvalArgs eval;
  CLI::App *c_eval = app.add_subcommand("eval", "score a split and write reports");
  c_eval->add_option("--checkpoint", eval.checkpoint)->required();
  c_eval->add_option("--manifest", eval.manifest);
  c_eval->add_option("--out", eval.out, "report directory");
  c_eval->add_option("--split", eval.split)
      ->check(CLI::IsMember({"train", "dev", "test"}));
  c_eval->add_flag("--augment", eval.augment, "apply the degradation protocol");
  c_eval->add_option("--noise", eval.noise, "noise WAV for the noisy branch");

  AblateArgs ablate;
  CLI::App *c_ablate = app.add_subcommand("ablate", "sweep the loss weight");
  c_ablate->add_option("--manifest", ablate.manifest);
  c_ablate->add_option("--workdir", ablate.workdir);
  c_ablate->add_option("--lambdas", ablate.lambdas, "default 1.0 0.9 ... 0.1")
      ->delimiter(',');
  c_ablate->add_option("--steps", ablate.steps);

  PlotArgs plot;
  CLI::App *c_plot = app.add_subcommand("plot", "render an SVG figure");
  c_plot->add_option("kind", plot.kind, "specdiff, confusion, det or ablation")
      ->required()
      ->check(CLI::IsMember({"specdiff", "confusion", "det", "ablation"}));
  c_plot->add_option("--input", plot.input,
                     "WAV, confusion.tsv, scores.tsv or ablation.tsv")
      ->required();
  c_plot->add_option("--vocoded", plot.vocoded, "specdiff: vocoded WAV");
  c_plot->add_option("--vocoder", plot.vocoder, "specdiff: backend to self-vocode with");
  c_plot->add_option("--out", plot.out, "SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*c_toy) return CmdMakeToy(g, toy);
    if (*c_build) return CmdBuild(g, build);
    if (*c_train) return CmdTrain(g, train);
    if (*c_eval) return CmdEval(g, eval);
    if (*c_ablate) return CmdAblate(g, ablate);
    if (*c_plot) return CmdPlot(g, plot);
  } catch (const ConfigError &e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kUsage;
  } catch (const ArgumentError &e) {
    std::fprintf(stderr, "argument error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return kUsage;
}
