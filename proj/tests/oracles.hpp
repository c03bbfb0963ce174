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

// Slow, loop-based reference implementations. They deliberately share no
// code with the library.

#ifndef VADCLIP_TESTS_ORACLES_HPP_
#define VADCLIP_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "vad/fusion.hpp"
#include "vad/layers.hpp"
#include "vad/metrics.hpp"

namespace vad::oracle {

// softmax(q k^T / sqrt(c)) v, c = k.cols().
inline Mat Attention(const Mat& q, const Mat& k, const Mat& v) {
  const long n = q.rows(), c = k.cols();
  Mat out = Mat::Zero(n, v.cols());
  for (long i = 0; i < n; ++i) {
    std::vector<double> s(n);
    double peak = -1e300;
    for (long j = 0; j < n; ++j) {
      double dot = 0;
      for (long d = 0; d < c; ++d) dot += q(i, d) * k(j, d);
      s[j] = dot / std::sqrt(static_cast<double>(c));
      peak = std::max(peak, s[j]);
    }
    double z = 0;
    for (auto& x : s) z += (x = std::exp(x - peak));
    for (long j = 0; j < n; ++j) {
      for (long d = 0; d < v.cols(); ++d) out(i, d) += s[j] / z * v(j, d);
    }
  }
  return out;
}

// Elementwise mean of equally shaped matrices.
template <typename M>
std::vector<std::vector<double>> Mean(const std::vector<M>& items) {
  std::vector<std::vector<double>> out(items[0].rows(), std::vector<double>(items[0].cols(), 0.0));
  for (const auto& m : items) {
    for (long r = 0; r < m.rows(); ++r) {
      for (long c = 0; c < m.cols(); ++c) out[r][c] += m(r, c);
    }
  }
  for (auto& row : out) {
    for (auto& x : row) x /= static_cast<double>(items.size());
  }
  return out;
}

inline double F1(const std::vector<PredictionRecord>& preds) {
  double tp = 0, fp = 0, fn = 0;
  for (const auto& p : preds) {
    const bool t = p.true_label == Label::kSpeaking;
    const bool y = p.predicted_label == Label::kSpeaking;
    if (t && y) tp += 1;
    if (!t && y) fp += 1;
    if (t && !y) fn += 1;
  }
  const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

// Largest relative error between analytic parameter and input gradients of
// mean BCE(head(x), y) and central differences.
inline double GradientError(FusionHead& head, const Mat& x, const Vec& y, double h = 1e-5) {
  auto loss = [&](const Mat& input) {
    const Vec z = head.Forward(input, true);
    double total = 0;
    for (long i = 0; i < z.size(); ++i) {
      total += std::max(z[i], 0.0) - z[i] * y[i] + std::log1p(std::exp(-std::abs(z[i])));
    }
    return total / static_cast<double>(z.size());
  };
  head.ZeroGrad();
  const Vec z = head.Forward(x, true);
  Vec dz(z.size());
  for (long i = 0; i < z.size(); ++i) {
    dz[i] = (1.0 / (1.0 + std::exp(-z[i])) - y[i]) / static_cast<double>(z.size());
  }
  const Mat dx = head.Backward(dz);

  double worst = 0;
  auto compare = [&](double analytic, double numeric) {
    const double scale = std::max(std::abs(analytic) + std::abs(numeric), 1e-6);
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  };
  for (auto& p : head.Params()) {
    for (long i = 0; i < p.value->size(); ++i) {
      double& w = p.value->data()[i];
      const double saved = w;
      w = saved + h;
      const double up = loss(x);
      w = saved - h;
      const double down = loss(x);
      w = saved;
      compare(p.grad->data()[i], (up - down) / (2 * h));
    }
  }
  Mat probe = x;
  for (long i = 0; i < probe.size(); ++i) {
    const double saved = probe.data()[i];
    probe.data()[i] = saved + h;
    const double up = loss(probe);
    probe.data()[i] = saved - h;
    const double down = loss(probe);
    probe.data()[i] = saved;
    compare(dx.data()[i], (up - down) / (2 * h));
  }
  return worst;
}

}  // namespace vad::oracle

#endif  // VADCLIP_TESTS_ORACLES_HPP_
