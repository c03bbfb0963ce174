// Copyright 2026 The vadclip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VADCLIP_VAD_OPTIMIZER_HPP_
#define VADCLIP_VAD_OPTIMIZER_HPP_

#include <map>
#include <string>
#include <vector>

#include "vad/layers.hpp"
#include "vad/tensor_io.hpp"

namespace vad {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // L2 penalty added to the gradient before the moment updates.
  double weight_decay = 1e-4;
};

class Adam {
 public:
  explicit Adam(AdamConfig config) : config_(config) {}

  // Applies one update to every parameter from its accumulated gradient.
  void Step(const std::vector<ParamRef>& params);

  long step_count() const { return step_; }
  const AdamConfig& config() const { return config_; }

  // Moments as "adam.m.<param>" / "adam.v.<param>"; the step count lives in
  // the header under "adam_step".
  void SaveState(TensorFile& file) const;
  void LoadState(const TensorFile& file);

 private:
  AdamConfig config_;
  long step_ = 0;
  std::map<std::string, Mat> m_, v_;
};

}  // namespace vad

#endif  // VADCLIP_VAD_OPTIMIZER_HPP_
