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

#ifndef VADCLIP_VAD_LAYERS_HPP_
#define VADCLIP_VAD_LAYERS_HPP_

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "vad/random.hpp"

namespace vad {

// Rows are samples (or tokens); columns are features.
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct ParamRef {
  std::string name;
  Mat* value;
  Mat* grad;
};

// Non-trainable state saved with a model (batch-norm running statistics).
struct BufferRef {
  std::string name;
  Mat* value;
};

// y = x W^T + b. Backward accumulates into the gradients.
class Linear {
 public:
  Linear() = default;
  Linear(int in, int out) : weight(Mat::Zero(out, in)), bias(Mat::Zero(1, out)) { ZeroGrad(); }

  // Fan-in scaled uniform U(-1/sqrt(in), 1/sqrt(in)) for weight and bias.
  void Initialize(Rng& rng);
  Mat Forward(const Mat& x);
  Mat Backward(const Mat& dy);
  void ZeroGrad();
  void Collect(const std::string& prefix, std::vector<ParamRef>& out);

  int in() const { return static_cast<int>(weight.cols()); }
  int out() const { return static_cast<int>(weight.rows()); }

  Mat weight, bias;
  Mat grad_weight, grad_bias;

 private:
  Mat input_;
};

// Per-feature normalisation over the batch. Training uses batch statistics
// (biased variance) and updates running estimates; evaluation uses the
// running estimates.
class BatchNorm {
 public:
  BatchNorm() = default;
  explicit BatchNorm(int dim);

  Mat Forward(const Mat& x, bool train);
  Mat Backward(const Mat& dy);
  void ZeroGrad();
  void Collect(const std::string& prefix, std::vector<ParamRef>& out);
  void CollectBuffers(const std::string& prefix, std::vector<BufferRef>& out);

  Mat gamma, beta, grad_gamma, grad_beta;
  Mat running_mean, running_var;
  double momentum = 0.1;
  double eps = 1e-5;

 private:
  bool train_ = false;
  Mat xhat_;
  Eigen::RowVectorXd inv_std_;
};

// Per-row normalisation over features.
class LayerNorm {
 public:
  LayerNorm() = default;
  explicit LayerNorm(int dim);

  Mat Forward(const Mat& x);
  Mat Backward(const Mat& dy);
  void ZeroGrad();
  void Collect(const std::string& prefix, std::vector<ParamRef>& out);

  Mat gamma, beta, grad_gamma, grad_beta;
  double eps = 1e-5;

 private:
  Mat xhat_;
  Vec inv_std_;
};

class Relu {
 public:
  Mat Forward(const Mat& x);
  Mat Backward(const Mat& dy) const;

 private:
  Mat mask_;
};

struct AttentionResult {
  Mat output;   // weights * V
  Mat weights;  // softmax(Q K^T / sqrt(c)), rows sum to 1
};

// Single-head scaled dot-product attention, c = K.cols().
AttentionResult SelfAttention(const Mat& q, const Mat& k, const Mat& v);

// Multi-head self-attention over groups of `tokens` consecutive rows (one
// group per sample). Q, K and V come from separate projections of the
// input; head outputs are concatenated back to the model width. There is
// no output projection and no positional encoding.
class MultiHeadSelfAttention {
 public:
  MultiHeadSelfAttention() = default;
  MultiHeadSelfAttention(int dim, int heads);

  void Initialize(Rng& rng);
  Mat Forward(const Mat& x, int tokens);
  Mat Backward(const Mat& dy);
  void ZeroGrad();
  void Collect(const std::string& prefix, std::vector<ParamRef>& out);

  int heads() const { return heads_; }

  Linear query, key, value;

  // Attention weights of the last forward, per (sample, head).
  const std::vector<Mat>& last_weights() const { return probs_; }

 private:
  int heads_ = 1;
  int tokens_ = 0;
  Mat q_, k_, v_;
  std::vector<Mat> probs_;
};

// Numerically stable max(z,0) - z*y + log(1 + exp(-|z|)). Throws
// kNonFiniteLogit.
double BceWithLogits(double logit, double label);

struct BatchLoss {
  double loss = 0.0;    // mean over the batch
  Vec grad;             // d loss / d logit
};

BatchLoss BceWithLogitsBatch(const Vec& logits, const Vec& labels);

}  // namespace vad

#endif  // VADCLIP_VAD_LAYERS_HPP_
