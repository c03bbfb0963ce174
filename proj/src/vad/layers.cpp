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

#include "vad/layers.hpp"

#include <cmath>

#include "vad/error.hpp"

namespace vad {

void Linear::Initialize(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in()));
  for (Eigen::Index i = 0; i < weight.size(); ++i) weight.data()[i] = rng.Uniform(-bound, bound);
  for (Eigen::Index i = 0; i < bias.size(); ++i) bias.data()[i] = rng.Uniform(-bound, bound);
}

Mat Linear::Forward(const Mat& x) {
  if (x.cols() != weight.cols()) {
    Fail(ErrorKind::kDimensionMismatch, "linear layer expects " + std::to_string(weight.cols()) +
                                            " inputs, got " + std::to_string(x.cols()));
  }
  input_ = x;
  Mat y = x * weight.transpose();
  y.rowwise() += bias.row(0);
  return y;
}

Mat Linear::Backward(const Mat& dy) {
  grad_weight.noalias() += dy.transpose() * input_;
  grad_bias += dy.colwise().sum();
  return dy * weight;
}

void Linear::ZeroGrad() {
  grad_weight = Mat::Zero(weight.rows(), weight.cols());
  grad_bias = Mat::Zero(1, bias.cols());
}

void Linear::Collect(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".weight", &weight, &grad_weight});
  out.push_back({prefix + ".bias", &bias, &grad_bias});
}

BatchNorm::BatchNorm(int dim)
    : gamma(Mat::Ones(1, dim)),
      beta(Mat::Zero(1, dim)),
      running_mean(Mat::Zero(1, dim)),
      running_var(Mat::Ones(1, dim)) {
  ZeroGrad();
}

Mat BatchNorm::Forward(const Mat& x, bool train) {
  train_ = train;
  const auto n = static_cast<double>(x.rows());
  Eigen::RowVectorXd mean, var;
  if (train) {
    mean = x.colwise().mean();
    const Mat centred = x.rowwise() - mean;
    var = centred.array().square().colwise().sum() / n;
    const double unbias = n > 1 ? n / (n - 1) : 1.0;
    running_mean = (1 - momentum) * running_mean + momentum * mean;
    running_var = (1 - momentum) * running_var + momentum * (var * unbias);
  } else {
    mean = running_mean.row(0);
    var = running_var.row(0);
  }
  inv_std_ = (var.array() + eps).rsqrt();
  xhat_ = (x.rowwise() - mean).array().rowwise() * inv_std_.array();
  Mat y = xhat_.array().rowwise() * gamma.row(0).array();
  y.rowwise() += beta.row(0);
  return y;
}

Mat BatchNorm::Backward(const Mat& dy) {
  grad_gamma += (dy.array() * xhat_.array()).colwise().sum().matrix();
  grad_beta += dy.colwise().sum();
  const Mat dxhat = dy.array().rowwise() * gamma.row(0).array();
  if (!train_) return dxhat.array().rowwise() * inv_std_.array();
  const auto n = static_cast<double>(dy.rows());
  const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
  const Eigen::RowVectorXd sum_dxhat_xhat = (dxhat.array() * xhat_.array()).colwise().sum();
  Mat dx = (n * dxhat.array()).matrix();
  dx.rowwise() -= sum_dxhat;
  dx -= (xhat_.array().rowwise() * sum_dxhat_xhat.array()).matrix();
  return (dx.array().rowwise() * (inv_std_.array() / n)).matrix();
}

void BatchNorm::ZeroGrad() {
  grad_gamma = Mat::Zero(1, gamma.cols());
  grad_beta = Mat::Zero(1, beta.cols());
}

void BatchNorm::Collect(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".gamma", &gamma, &grad_gamma});
  out.push_back({prefix + ".beta", &beta, &grad_beta});
}

void BatchNorm::CollectBuffers(const std::string& prefix, std::vector<BufferRef>& out) {
  out.push_back({prefix + ".running_mean", &running_mean});
  out.push_back({prefix + ".running_var", &running_var});
}

LayerNorm::LayerNorm(int dim) : gamma(Mat::Ones(1, dim)), beta(Mat::Zero(1, dim)) { ZeroGrad(); }

Mat LayerNorm::Forward(const Mat& x) {
  const Vec mean = x.rowwise().mean();
  const Mat centred = x.colwise() - mean;
  const Vec var = centred.array().square().rowwise().mean();
  inv_std_ = (var.array() + eps).rsqrt();
  xhat_ = centred.array().colwise() * inv_std_.array();
  Mat y = xhat_.array().rowwise() * gamma.row(0).array();
  y.rowwise() += beta.row(0);
  return y;
}

Mat LayerNorm::Backward(const Mat& dy) {
  grad_gamma += (dy.array() * xhat_.array()).colwise().sum().matrix();
  grad_beta += dy.colwise().sum();
  const Mat dxhat = dy.array().rowwise() * gamma.row(0).array();
  const auto d = static_cast<double>(dy.cols());
  const Vec sum_dxhat = dxhat.rowwise().sum();
  const Vec sum_dxhat_xhat = (dxhat.array() * xhat_.array()).rowwise().sum();
  Mat dx = (d * dxhat.array()).matrix();
  dx.colwise() -= sum_dxhat;
  dx -= (xhat_.array().colwise() * sum_dxhat_xhat.array()).matrix();
  return (dx.array().colwise() * (inv_std_.array() / d)).matrix();
}

void LayerNorm::ZeroGrad() {
  grad_gamma = Mat::Zero(1, gamma.cols());
  grad_beta = Mat::Zero(1, beta.cols());
}

void LayerNorm::Collect(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".gamma", &gamma, &grad_gamma});
  out.push_back({prefix + ".beta", &beta, &grad_beta});
}

Mat Relu::Forward(const Mat& x) {
  mask_ = (x.array() > 0.0).cast<double>();
  return x.cwiseProduct(mask_);
}

Mat Relu::Backward(const Mat& dy) const { return dy.cwiseProduct(mask_); }

namespace {

// Row-wise softmax, max-shifted.
Mat SoftmaxRows(const Mat& s) {
  Mat p = s.colwise() - s.rowwise().maxCoeff();
  p = p.array().exp();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

}  // namespace

AttentionResult SelfAttention(const Mat& q, const Mat& k, const Mat& v) {
  if (q.rows() != k.rows() || k.rows() != v.rows()) {
    Fail(ErrorKind::kDimensionMismatch, "Q, K and V must have the same number of rows");
  }
  if (q.cols() != k.cols()) {
    Fail(ErrorKind::kDimensionMismatch, "Q and K must have the same feature dimension");
  }
  if (k.cols() == 0) Fail(ErrorKind::kDimensionMismatch, "attention needs a non-empty feature dimension");
  AttentionResult r;
  r.weights = SoftmaxRows(q * k.transpose() / std::sqrt(static_cast<double>(k.cols())));
  r.output = r.weights * v;
  return r;
}

MultiHeadSelfAttention::MultiHeadSelfAttention(int dim, int heads)
    : query(dim, dim), key(dim, dim), value(dim, dim), heads_(heads) {
  if (heads <= 0 || dim % heads != 0) {
    Fail(ErrorKind::kDimensionMismatch, "model width must divide evenly across heads");
  }
}

void MultiHeadSelfAttention::Initialize(Rng& rng) {
  query.Initialize(rng);
  key.Initialize(rng);
  value.Initialize(rng);
}

Mat MultiHeadSelfAttention::Forward(const Mat& x, int tokens) {
  if (tokens <= 0 || x.rows() % tokens != 0) {
    Fail(ErrorKind::kDimensionMismatch, "token rows do not divide into samples");
  }
  tokens_ = tokens;
  q_ = query.Forward(x);
  k_ = key.Forward(x);
  v_ = value.Forward(x);
  const auto samples = x.rows() / tokens;
  const int dh = static_cast<int>(x.cols()) / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat out(x.rows(), x.cols());
  probs_.assign(static_cast<std::size_t>(samples * heads_), Mat());
  for (Eigen::Index s = 0; s < samples; ++s) {
    for (int h = 0; h < heads_; ++h) {
      const auto qs = q_.block(s * tokens, h * dh, tokens, dh);
      const auto ks = k_.block(s * tokens, h * dh, tokens, dh);
      const auto vs = v_.block(s * tokens, h * dh, tokens, dh);
      Mat p = SoftmaxRows(qs * ks.transpose() * scale);
      out.block(s * tokens, h * dh, tokens, dh).noalias() = p * vs;
      probs_[static_cast<std::size_t>(s * heads_ + h)] = std::move(p);
    }
  }
  return out;
}

Mat MultiHeadSelfAttention::Backward(const Mat& dy) {
  const Eigen::Index tokens = tokens_;
  const auto samples = dy.rows() / tokens;
  const int dh = static_cast<int>(dy.cols()) / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat dq(dy.rows(), dy.cols()), dk(dy.rows(), dy.cols()), dv(dy.rows(), dy.cols());
  for (Eigen::Index s = 0; s < samples; ++s) {
    for (int h = 0; h < heads_; ++h) {
      const Mat& p = probs_[static_cast<std::size_t>(s * heads_ + h)];
      const auto qs = q_.block(s * tokens, h * dh, tokens, dh);
      const auto ks = k_.block(s * tokens, h * dh, tokens, dh);
      const auto vs = v_.block(s * tokens, h * dh, tokens, dh);
      const auto dout = dy.block(s * tokens, h * dh, tokens, dh);
      dv.block(s * tokens, h * dh, tokens, dh).noalias() = p.transpose() * dout;
      const Mat dp = dout * vs.transpose();
      const Vec row_dot = (dp.array() * p.array()).rowwise().sum();
      const Mat ds = (p.array() * (dp.colwise() - row_dot).array()).matrix() * scale;
      dq.block(s * tokens, h * dh, tokens, dh).noalias() = ds * ks;
      dk.block(s * tokens, h * dh, tokens, dh).noalias() = ds.transpose() * qs;
    }
  }
  Mat dx = query.Backward(dq);
  dx += key.Backward(dk);
  dx += value.Backward(dv);
  return dx;
}

void MultiHeadSelfAttention::ZeroGrad() {
  query.ZeroGrad();
  key.ZeroGrad();
  value.ZeroGrad();
}

void MultiHeadSelfAttention::Collect(const std::string& prefix, std::vector<ParamRef>& out) {
  query.Collect(prefix + ".query", out);
  key.Collect(prefix + ".key", out);
  value.Collect(prefix + ".value", out);
}

double BceWithLogits(double logit, double label) {
  if (!std::isfinite(logit)) Fail(ErrorKind::kNonFiniteLogit, "logit is not finite");
  return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

BatchLoss BceWithLogitsBatch(const Vec& logits, const Vec& labels) {
  BatchLoss out;
  const auto n = static_cast<double>(logits.size());
  out.grad.resize(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    out.loss += BceWithLogits(logits[i], labels[i]);
    const double z = logits[i];
    const double sigmoid = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    out.grad[i] = (sigmoid - labels[i]) / n;
  }
  out.loss /= n;
  return out;
}

}  // namespace vad
