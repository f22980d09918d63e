// src/checkpoint.cc

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

#include "vocart/checkpoint.h"

#include <cstring>
#include <fstream>

#include "json.hpp"
#include "vocart/config.h"
#include "vocart/errors.h"

namespace vocart {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'V', 'O', 'C', 'A', 'R', 'T', 'C', 'K'};
constexpr uint32_t kVersion = 1;

struct TensorRef {
  std::string name;
  std::string kind;
  std::vector<size_t> shape;
  const std::vector<double> *data;
};

}  // namespace

void SaveCheckpoint(const fs::path &path, const DetectorModel &model,
                    const RegistrySnapshot &registry,
                    const OptimizerSnapshot *optimizer, long step,
                    double dev_eer) {
  ValidateSnapshot(registry);
  if (static_cast<int>(registry.size()) + 1 != model.config().num_vocoder_classes)
    throw ArgumentError("registry size does not match the vocoder head");

  std::vector<TensorRef> tensors;
  for (const auto &p : model.parameters())
    tensors.push_back({p.name, "param", p.shape, &p.value});
  for (const auto &b : model.buffers())
    tensors.push_back({b.name, "buffer", b.shape, &b.value});
  json header;
  header["config"] = ToJson(model.config());
  header["registry"] = ToJson(registry);
  header["step"] = step;
  header["dev_eer"] = dev_eer;
  if (optimizer) {
    const auto &params = model.parameters();
    const AdamState &st = optimizer->state;
    if (!st.m.empty() &&
        (st.m.size() != params.size() || st.v.size() != params.size()))
      throw ShapeError("optimizer state does not match the model");
    header["optimizer"] = {{"type", "adam"},
                           {"learning_rate", optimizer->learning_rate},
                           {"beta1", optimizer->config.beta1},
                           {"beta2", optimizer->config.beta2},
                           {"eps", optimizer->config.eps},
                           {"step", st.step},
                           {"has_moments", !st.m.empty()}};
    for (size_t i = 0; i < st.m.size(); ++i) {
      tensors.push_back({params[i].name, "adam_m", params[i].shape, &st.m[i]});
      tensors.push_back({params[i].name, "adam_v", params[i].shape, &st.v[i]});
    }
  }
  json list = json::array();
  uint64_t offset = 0;
  for (const auto &t : tensors) {
    list.push_back({{"name", t.name}, {"kind", t.kind}, {"shape", t.shape},
                    {"offset", offset}});
    offset += t.data->size();
  }
  header["tensors"] = list;
  const std::string text = header.dump();

  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + tmp.string());
    const uint64_t hlen = text.size();
    f.write(kMagic, sizeof(kMagic));
    f.write(reinterpret_cast<const char *>(&kVersion), sizeof(kVersion));
    f.write(reinterpret_cast<const char *>(&hlen), sizeof(hlen));
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto &t : tensors)
      f.write(reinterpret_cast<const char *>(t.data->data()),
              static_cast<std::streamsize>(t.data->size() * sizeof(double)));
    if (!f) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place: " + ec.message());
}

Checkpoint LoadCheckpoint(const fs::path &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  char magic[8];
  uint32_t version = 0;
  uint64_t hlen = 0;
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError(path.string() + " is not a vocart checkpoint");
  f.read(reinterpret_cast<char *>(&version), sizeof(version));
  f.read(reinterpret_cast<char *>(&hlen), sizeof(hlen));
  if (!f) throw FormatError("truncated checkpoint header");
  if (version != kVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  if (hlen > (1u << 30)) throw FormatError("implausible checkpoint header size");
  std::string text(hlen, '\0');
  f.read(text.data(), static_cast<std::streamsize>(hlen));
  if (!f) throw FormatError("truncated checkpoint header");
  const std::streampos data_start = f.tellg();

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception &e) {
    throw FormatError(std::string("bad checkpoint header: ") + e.what());
  }
  ModelConfig cfg;
  try {
    cfg = ModelConfigFromJson(header.at("config"));
  } catch (const ConfigError &e) {
    throw FormatError(std::string("bad checkpoint config: ") + e.what());
  } catch (const json::exception &e) {
    throw FormatError(std::string("bad checkpoint header: ") + e.what());
  }

  Checkpoint ck{DetectorModel(cfg), {}, std::nullopt, 0, -1.0};
  try {
    ck.registry = RegistryFromJson(header.at("registry"));
    ck.step = header.at("step").get<long>();
    ck.dev_eer = header.at("dev_eer").get<double>();
  } catch (const json::exception &e) {
    throw FormatError(std::string("bad checkpoint header: ") + e.what());
  }
  if (static_cast<int>(ck.registry.size()) + 1 != cfg.num_vocoder_classes)
    throw FormatError("checkpoint registry does not match its vocoder head");

  auto &params = ck.model.parameters();
  auto &buffers = ck.model.buffers();
  std::vector<std::vector<double>> adam_m(params.size()), adam_v(params.size());
  std::vector<bool> seen_p(params.size()), seen_b(buffers.size());
  auto read_into = [&](std::vector<double> &dst, uint64_t offset) {
    f.seekg(data_start + static_cast<std::streamoff>(offset * sizeof(double)));
    f.read(reinterpret_cast<char *>(dst.data()),
           static_cast<std::streamsize>(dst.size() * sizeof(double)));
    if (!f) throw FormatError("truncated checkpoint data");
  };
  auto find = [](std::vector<Parameter> &v, const std::string &n) -> long {
    for (size_t i = 0; i < v.size(); ++i)
      if (v[i].name == n) return static_cast<long>(i);
    return -1;
  };
  try {
    for (const auto &t : header.at("tensors")) {
      const std::string name = t.at("name").get<std::string>();
      const std::string kind = t.at("kind").get<std::string>();
      const auto shape = t.at("shape").get<std::vector<size_t>>();
      const uint64_t offset = t.at("offset").get<uint64_t>();
      std::vector<Parameter> &pool = kind == "buffer" ? buffers : params;
      const long idx = find(pool, name);
      if (idx < 0) throw FormatError("unexpected tensor " + name);
      if (pool[idx].shape != shape)
        throw FormatError("shape mismatch for tensor " + name);
      if (kind == "param") {
        read_into(pool[idx].value, offset);
        seen_p[idx] = true;
      } else if (kind == "buffer") {
        read_into(pool[idx].value, offset);
        seen_b[idx] = true;
      } else if (kind == "adam_m" || kind == "adam_v") {
        auto &dst = kind == "adam_m" ? adam_m[idx] : adam_v[idx];
        dst.assign(pool[idx].size(), 0.0);
        read_into(dst, offset);
      } else {
        throw FormatError("unknown tensor kind " + kind);
      }
    }
    for (size_t i = 0; i < params.size(); ++i)
      if (!seen_p[i]) throw FormatError("missing tensor " + params[i].name);
    for (size_t i = 0; i < buffers.size(); ++i)
      if (!seen_b[i]) throw FormatError("missing tensor " + buffers[i].name);
    if (header.contains("optimizer")) {
      const json &o = header["optimizer"];
      OptimizerSnapshot s;
      s.learning_rate = o.at("learning_rate").get<double>();
      s.config.beta1 = o.at("beta1").get<double>();
      s.config.beta2 = o.at("beta2").get<double>();
      s.config.eps = o.at("eps").get<double>();
      s.state.step = o.at("step").get<uint64_t>();
      if (o.at("has_moments").get<bool>()) {
        for (size_t i = 0; i < params.size(); ++i)
          if (adam_m[i].size() != params[i].size() ||
              adam_v[i].size() != params[i].size())
            throw FormatError("missing optimizer moments for " + params[i].name);
        s.state.m = std::move(adam_m);
        s.state.v = std::move(adam_v);
      }
      ck.optimizer = std::move(s);
    }
  } catch (const json::exception &e) {
    throw FormatError(std::string("bad checkpoint tensor table: ") + e.what());
  }
  return ck;
}

}  // namespace vocart
