// src/config.cc

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

#include "vocart/config.h"

#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "vocart/errors.h"
#include "vocart/toy.h"

namespace vocart {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads the keys of one JSON object into typed fields and rejects the rest.
class Reader {
 public:
  Reader(const json &j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
    if (!j.is_object()) throw ConfigError(ctx_ + ": expected an object");
  }

  template <typename T>
  void Get(const std::string &key, T &out) {
    auto it = j_.find(key);
    seen_.insert(key);
    if (it == j_.end()) return;
    const json &v = *it;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) Bad(key, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) Bad(key, "expected an integer");
      if (std::is_unsigned_v<T> && !v.is_number_unsigned())
        Bad(key, "expected a non-negative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) Bad(key, "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) Bad(key, "expected a string");
    }
    try {
      out = v.get<T>();
    } catch (const json::exception &e) {
      Bad(key, e.what());
    }
  }

  const json *Child(const std::string &key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigError(ctx_ + ": unknown key '" + it.key() + "'");
  }

  [[noreturn]] void Bad(const std::string &key, const std::string &why) const {
    throw ConfigError(ctx_ + "." + key + ": " + why);
  }

 private:
  const json &j_;
  std::string ctx_;
  std::set<std::string> seen_;
};

std::string TypeName(BackendSpec::Type t) {
  switch (t) {
    case BackendSpec::Type::kGriffinLim:
      return "griffin-lim";
    case BackendSpec::Type::kToy:
      return "toy";
    case BackendSpec::Type::kExternal:
      return "external";
  }
  return "?";
}

BackendSpec GriffinLim(const std::string &name) {
  BackendSpec s;
  s.type = BackendSpec::Type::kGriffinLim;
  s.name = name;
  return s;
}

BackendSpec Toy(const std::string &name, const Signature &sig) {
  BackendSpec s;
  s.type = BackendSpec::Type::kToy;
  s.name = name;
  s.signature = sig;
  return s;
}

}  // namespace

AugmentPolicy AugmentSpec::ToPolicy() const {
  AugmentPolicy p;
  p.p_original = p_original;
  p.p_resampled = p_resampled;
  p.p_noisy = p_noisy;
  p.intermediate_rates = intermediate_rates;
  p.snrs_db = snrs_db;
  if (p_noisy > 0.0 && !noise_path.empty())
    p.noise = std::make_shared<const Waveform>(LoadAudio(noise_path));
  p.Validate();
  return p;
}

RunConfig RunConfig::Defaults(const std::string &profile) {
  RunConfig c;
  c.profile = profile;
  if (profile == "tiny") {
    c.model = ModelConfig::Tiny(3);
    c.vocoders = DefaultToyBackends(0);
    c.train.max_steps = 400;
    c.train.eval_interval = 100;
  } else if (profile == "paper") {
    c.model = ModelConfig::Paper(7);
    c.vocoders = {GriffinLim("griffin-lim"),
                  Toy("gl-comb-d8", Signature::Comb(8)),
                  Toy("gl-comb-d21", Signature::Comb(21)),
                  Toy("gl-notch-3000", Signature::Notch(3000, 5)),
                  Toy("gl-notch-7000", Signature::Notch(7000, 5)),
                  Toy("gl-quant-b8", Signature::Quantize(8))};
  } else {
    throw ConfigError("unknown profile '" + profile + "' (tiny or paper)");
  }
  return c;
}

json ToJson(const MelParams &p) {
  return {{"sample_rate", p.sample_rate}, {"n_fft", p.n_fft},
          {"hop_length", p.hop_length},   {"win_length", p.win_length},
          {"n_mels", p.n_mels},           {"fmin", p.fmin},
          {"fmax", p.fmax},               {"log_floor", p.log_floor}};
}

json ToJson(const ModelConfig &c) {
  return {{"input_length", c.input_length},
          {"sample_rate", c.sample_rate},
          {"sinc_filters", c.sinc_filters},
          {"sinc_kernel", c.sinc_kernel},
          {"block_channels", c.block_channels},
          {"blocks_per_group", c.blocks_per_group},
          {"gru_hidden", c.gru_hidden},
          {"embedding_dim", c.embedding_dim},
          {"num_vocoder_classes", c.num_vocoder_classes},
          {"seed", c.seed}};
}

json ToJson(const TrainConfig &c) {
  return {{"lambda", c.lambda},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"max_steps", c.max_steps},
          {"seed", c.seed},
          {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2},
                    {"eps", c.adam.eps}}},
          {"eval_interval", c.eval_interval},
          {"augment_train", c.augment_train},
          {"binary_only", c.binary_only},
          {"workers", c.workers}};
}

json ToJson(const BackendSpec &s) {
  json j = {{"type", TypeName(s.type)}, {"name", s.name}};
  if (s.type != BackendSpec::Type::kExternal) {
    j["n_iters"] = s.n_iters;
    j["seed"] = s.seed;
  }
  if (s.type == BackendSpec::Type::kToy) {
    const Signature &g = s.signature;
    switch (g.kind) {
      case Signature::Kind::kComb:
        j["signature"] = {{"kind", "comb"}, {"delay", g.delay}, {"gain", g.gain}};
        break;
      case Signature::Kind::kNotch:
        j["signature"] = {{"kind", "notch"}, {"hz", g.notch_hz}, {"q", g.q}};
        break;
      case Signature::Kind::kQuantize:
        j["signature"] = {{"kind", "quantize"}, {"bits", g.bits}};
        break;
    }
  }
  if (s.type == BackendSpec::Type::kExternal) j["command"] = s.command;
  return j;
}

json ToJson(const RegistrySnapshot &r) {
  json a = json::array();
  for (const auto &e : r) a.push_back({{"class_id", e.class_id}, {"name", e.name}});
  return a;
}

json ToJson(const RunConfig &c) {
  json voc = json::array();
  for (const auto &s : c.vocoders) voc.push_back(ToJson(s));
  return {{"profile", c.profile},
          {"seed", c.seed},
          {"workers", c.workers},
          {"mel", ToJson(c.mel)},
          {"model", ToJson(c.model)},
          {"train", ToJson(c.train)},
          {"augment",
           {{"p_original", c.augment.p_original},
            {"p_resampled", c.augment.p_resampled},
            {"p_noisy", c.augment.p_noisy},
            {"intermediate_rates", c.augment.intermediate_rates},
            {"snrs_db", c.augment.snrs_db},
            {"noise_path", c.augment.noise_path}}},
          {"split",
           {{"train", c.split.train}, {"dev", c.split.dev}, {"test", c.split.test}}},
          {"vocoders", voc},
          {"paths",
           {{"source_dir", c.paths.source_dir},
            {"out_dir", c.paths.out_dir},
            {"workdir", c.paths.workdir},
            {"manifest", c.paths.manifest}}}};
}

MelParams MelParamsFromJson(const json &j, MelParams p) {
  Reader r(j, "mel");
  r.Get("sample_rate", p.sample_rate);
  r.Get("n_fft", p.n_fft);
  r.Get("hop_length", p.hop_length);
  r.Get("win_length", p.win_length);
  r.Get("n_mels", p.n_mels);
  r.Get("fmin", p.fmin);
  r.Get("fmax", p.fmax);
  r.Get("log_floor", p.log_floor);
  r.Finish();
  return p;
}

ModelConfig ModelConfigFromJson(const json &j, ModelConfig c) {
  Reader r(j, "model");
  r.Get("input_length", c.input_length);
  r.Get("sample_rate", c.sample_rate);
  r.Get("sinc_filters", c.sinc_filters);
  r.Get("sinc_kernel", c.sinc_kernel);
  r.Get("block_channels", c.block_channels);
  r.Get("blocks_per_group", c.blocks_per_group);
  r.Get("gru_hidden", c.gru_hidden);
  r.Get("embedding_dim", c.embedding_dim);
  r.Get("num_vocoder_classes", c.num_vocoder_classes);
  r.Get("seed", c.seed);
  r.Finish();
  return c;
}

TrainConfig TrainConfigFromJson(const json &j, TrainConfig c) {
  Reader r(j, "train");
  r.Get("lambda", c.lambda);
  r.Get("learning_rate", c.learning_rate);
  r.Get("batch_size", c.batch_size);
  r.Get("max_steps", c.max_steps);
  r.Get("seed", c.seed);
  if (const json *a = r.Child("adam")) {
    Reader ra(*a, "train.adam");
    ra.Get("beta1", c.adam.beta1);
    ra.Get("beta2", c.adam.beta2);
    ra.Get("eps", c.adam.eps);
    ra.Finish();
  }
  r.Get("eval_interval", c.eval_interval);
  r.Get("augment_train", c.augment_train);
  r.Get("binary_only", c.binary_only);
  r.Get("workers", c.workers);
  r.Finish();
  return c;
}

BackendSpec BackendSpecFromJson(const json &j) {
  Reader r(j, "vocoders[]");
  BackendSpec s;
  std::string type;
  r.Get("type", type);
  r.Get("name", s.name);
  if (s.name.empty()) throw ConfigError("vocoder entry needs a name");
  if (type == "griffin-lim") {
    s.type = BackendSpec::Type::kGriffinLim;
  } else if (type == "toy") {
    s.type = BackendSpec::Type::kToy;
  } else if (type == "external") {
    s.type = BackendSpec::Type::kExternal;
  } else {
    throw ConfigError("vocoder '" + s.name + "': unknown type '" + type + "'");
  }
  r.Get("n_iters", s.n_iters);
  r.Get("seed", s.seed);
  r.Get("command", s.command);
  if (const json *g = r.Child("signature")) {
    Reader rg(*g, "vocoders[" + s.name + "].signature");
    std::string kind;
    rg.Get("kind", kind);
    Signature &sig = s.signature;
    if (kind == "comb") {
      sig.kind = Signature::Kind::kComb;
      rg.Get("delay", sig.delay);
      rg.Get("gain", sig.gain);
    } else if (kind == "notch") {
      sig.kind = Signature::Kind::kNotch;
      rg.Get("hz", sig.notch_hz);
      rg.Get("q", sig.q);
    } else if (kind == "quantize") {
      sig.kind = Signature::Kind::kQuantize;
      rg.Get("bits", sig.bits);
    } else {
      throw ConfigError("vocoder '" + s.name + "': unknown signature '" + kind + "'");
    }
    rg.Finish();
  } else if (s.type == BackendSpec::Type::kToy) {
    throw ConfigError("toy vocoder '" + s.name + "' needs a signature");
  }
  if (s.type == BackendSpec::Type::kExternal && s.command.empty())
    throw ConfigError("external vocoder '" + s.name + "' needs a command");
  r.Finish();
  return s;
}

RegistrySnapshot RegistryFromJson(const json &j) {
  if (!j.is_array()) throw FormatError("registry must be an array");
  RegistrySnapshot out;
  for (const auto &e : j) {
    if (!e.is_object() || !e.contains("class_id") || !e.contains("name") ||
        !e["class_id"].is_number_integer() || !e["name"].is_string())
      throw FormatError("malformed registry entry");
    out.push_back({e["class_id"].get<int>(), e["name"].get<std::string>()});
  }
  ValidateSnapshot(out);
  return out;
}

RunConfig RunConfigFromJson(const json &j) {
  if (!j.is_object()) throw ConfigError("config: expected an object");
  std::string profile = "paper";
  if (j.contains("profile")) {
    if (!j["profile"].is_string()) throw ConfigError("config.profile: expected a string");
    profile = j["profile"].get<std::string>();
  }
  RunConfig c = RunConfig::Defaults(profile);
  Reader r(j, "config");
  r.Get("profile", c.profile);
  r.Get("seed", c.seed);
  r.Get("workers", c.workers);
  if (const json *v = r.Child("mel")) c.mel = MelParamsFromJson(*v, c.mel);
  if (const json *v = r.Child("model")) c.model = ModelConfigFromJson(*v, c.model);
  if (const json *v = r.Child("train")) c.train = TrainConfigFromJson(*v, c.train);
  if (const json *v = r.Child("augment")) {
    Reader ra(*v, "augment");
    ra.Get("p_original", c.augment.p_original);
    ra.Get("p_resampled", c.augment.p_resampled);
    ra.Get("p_noisy", c.augment.p_noisy);
    ra.Get("intermediate_rates", c.augment.intermediate_rates);
    ra.Get("snrs_db", c.augment.snrs_db);
    ra.Get("noise_path", c.augment.noise_path);
    ra.Finish();
  }
  if (const json *v = r.Child("split")) {
    Reader rs(*v, "split");
    rs.Get("train", c.split.train);
    rs.Get("dev", c.split.dev);
    rs.Get("test", c.split.test);
    rs.Finish();
  }
  if (const json *v = r.Child("vocoders")) {
    if (!v->is_array()) throw ConfigError("config.vocoders: expected an array");
    c.vocoders.clear();
    for (const auto &e : *v) c.vocoders.push_back(BackendSpecFromJson(e));
  }
  if (const json *v = r.Child("paths")) {
    Reader rp(*v, "paths");
    rp.Get("source_dir", c.paths.source_dir);
    rp.Get("out_dir", c.paths.out_dir);
    rp.Get("workdir", c.paths.workdir);
    rp.Get("manifest", c.paths.manifest);
    rp.Finish();
  }
  r.Finish();
  return c;
}

void ValidateRunConfig(const RunConfig &c) {
  try {
    c.mel.Validate();
    c.model.Validate();
    c.train.Validate();
    for (const auto &s : c.vocoders)
      if (s.type == BackendSpec::Type::kToy) s.signature.Validate(c.mel.sample_rate);
    AugmentPolicy shape;
    shape.p_original = c.augment.p_original;
    shape.p_resampled = c.augment.p_resampled;
    shape.p_noisy = c.augment.p_noisy;
    shape.intermediate_rates = c.augment.intermediate_rates;
    shape.snrs_db = c.augment.snrs_db;
    shape.noise = std::make_shared<const Waveform>(std::vector<double>{0.0}, 1);
    shape.Validate();
  } catch (const ConfigError &) {
    throw;
  } catch (const Error &e) {
    throw ConfigError(e.what());
  }
  if (c.workers < 1) throw ConfigError("workers must be >= 1");
  if (c.vocoders.size() < 2)
    throw ConfigError("at least two vocoders are required");
  std::set<std::string> names;
  for (const auto &s : c.vocoders)
    if (!names.insert(s.name).second)
      throw ConfigError("duplicate vocoder name '" + s.name + "'");
  if (c.model.num_vocoder_classes != static_cast<int>(c.vocoders.size()) + 1)
    throw ConfigError("model.num_vocoder_classes must be the vocoder count + 1");
  const double sum = c.split.train + c.split.dev + c.split.test;
  if (!(c.split.train > 0 && c.split.dev > 0 && c.split.test > 0) ||
      std::abs(sum - 1.0) > 1e-6)
    throw ConfigError("split fractions must be positive and sum to 1");
}

RunConfig LoadRunConfig(const fs::path &path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception &e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  RunConfig c = RunConfigFromJson(j);
  ValidateRunConfig(c);
  auto must_exist = [](const std::string &p, const char *what) {
    if (!p.empty() && !fs::exists(p))
      throw ConfigError(std::string(what) + " does not exist: " + p);
  };
  must_exist(c.paths.source_dir, "paths.source_dir");
  must_exist(c.paths.manifest, "paths.manifest");
  must_exist(c.augment.noise_path, "augment.noise_path");
  return c;
}

void SaveRunConfig(const RunConfig &c, const fs::path &path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << ToJson(c).dump(2) << '\n';
  if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace vocart
