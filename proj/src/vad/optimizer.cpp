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

#include "vad/optimizer.hpp"

#include <cmath>

namespace vad {

void Adam::Step(const std::vector<ParamRef>& params) {
  ++step_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (const auto& p : params) {
    auto& m = m_[p.name];
    auto& v = v_[p.name];
    if (m.size() == 0) {
      m = Mat::Zero(p.value->rows(), p.value->cols());
      v = Mat::Zero(p.value->rows(), p.value->cols());
    }
    const Mat g = *p.grad + config_.weight_decay * *p.value;
    m = config_.beta1 * m + (1.0 - config_.beta1) * g;
    v = config_.beta2 * v + (1.0 - config_.beta2) * g.cwiseProduct(g);
    const Mat step = (m.array() / c1) / ((v.array() / c2).sqrt() + config_.eps);
    *p.value -= config_.learning_rate * step;
  }
}

void Adam::SaveState(TensorFile& file) const {
  file.header["adam_step"] = step_;
  for (const auto& [name, m] : m_) file.tensors.emplace_back("adam.m." + name, m);
  for (const auto& [name, v] : v_) file.tensors.emplace_back("adam.v." + name, v);
}

void Adam::LoadState(const TensorFile& file) {
  step_ = file.header.value("adam_step", 0L);
  m_.clear();
  v_.clear();
  for (const auto& [name, t] : file.tensors) {
    if (name.rfind("adam.m.", 0) == 0) m_[name.substr(7)] = t;
    if (name.rfind("adam.v.", 0) == 0) v_[name.substr(7)] = t;
  }
}

}  // namespace vad
