// src/optim.cc

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

#include "vocart/optim.h"

#include <cmath>

#include "vocart/errors.h"

namespace vocart {

Adam::Adam(double learning_rate, const AdamConfig &cfg)
    : lr_(learning_rate), cfg_(cfg) {
  if (!(learning_rate > 0) || !std::isfinite(learning_rate))
    throw ArgumentError("learning rate must be positive");
  if (!(cfg.beta1 >= 0 && cfg.beta1 < 1 && cfg.beta2 >= 0 && cfg.beta2 < 1))
    throw ArgumentError("Adam betas must lie in [0, 1)");
  if (!(cfg.eps > 0)) throw ArgumentError("Adam eps must be positive");
}

void Adam::Step(std::vector<Parameter> &params) {
  if (state_.m.empty() && state_.step == 0) {
    for (const auto &p : params) {
      state_.m.emplace_back(p.size(), 0.0);
      state_.v.emplace_back(p.size(), 0.0);
    }
  }
  if (state_.m.size() != params.size() || state_.v.size() != params.size())
    throw ShapeError("optimizer state does not match the parameter list");
  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const double c1 = 1.0 - std::pow(cfg_.beta1, t);
  const double c2 = 1.0 - std::pow(cfg_.beta2, t);
  for (size_t i = 0; i < params.size(); ++i) {
    Parameter &p = params[i];
    std::vector<double> &m = state_.m[i], &v = state_.v[i];
    if (m.size() != p.size() || v.size() != p.size())
      throw ShapeError("optimizer state does not match " + p.name);
    for (size_t k = 0; k < p.size(); ++k) {
      const double g = p.grad[k];
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g;
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g * g;
      p.value[k] -= lr_ * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg_.eps);
    }
  }
}

}  // namespace vocart
