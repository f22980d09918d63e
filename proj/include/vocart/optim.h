// include/vocart/optim.h

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

#ifndef VOCART_OPTIM_H_
#define VOCART_OPTIM_H_

#include <cstdint>
#include <vector>

#include "vocart/model.h"

namespace vocart {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool operator==(const AdamConfig &) const = default;
};

/// First and second moment estimates, one vector per parameter tensor.
struct AdamState {
  uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  bool operator==(const AdamState &) const = default;
};

/// Bias-corrected Adam without weight decay:
///   p -= lr * m_hat / (sqrt(v_hat) + eps).
class Adam {
 public:
  explicit Adam(double learning_rate, const AdamConfig &cfg = {});

  void Step(std::vector<Parameter> &params);

  double learning_rate() const { return lr_; }
  const AdamConfig &config() const { return cfg_; }
  const AdamState &state() const { return state_; }
  /// Throws ShapeError if the moments do not match `params` on the next Step.
  void set_state(AdamState s) { state_ = std::move(s); }

 private:
  double lr_;
  AdamConfig cfg_;
  AdamState state_;
};

}  // namespace vocart

#endif  // VOCART_OPTIM_H_
