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

#include "vad/fusion.hpp"

#include "vad/error.hpp"

namespace vad {

EmbeddingMatrix FuseForTransformer(const EmbeddingMatrix& visual, const EmbeddingMatrix& text) {
  if (visual.rows() != text.rows() || visual.cols() != text.cols()) {
    Fail(ErrorKind::kShapeMismatch, "visual and text token matrices differ in shape");
  }
  for (Eigen::Index r = 1; r < text.rows(); ++r) {
    if (text.row(r) != text.row(0)) {
      Fail(ErrorKind::kShapeMismatch, "text tokens must be identical replicas");
    }
  }
  EmbeddingMatrix out(visual.rows() + text.rows(), visual.cols());
  out.topRows(visual.rows()) = visual;
  out.bottomRows(text.rows()) = text;
  return out;
}

EmbeddingVector FuseForMlp(const EmbeddingMatrix& visual, const EmbeddingMatrix& text) {
  if (visual.rows() != text.rows() || visual.cols() != text.cols() || visual.rows() == 0) {
    Fail(ErrorKind::kShapeMismatch, "visual and text token matrices differ in shape");
  }
  const auto d = visual.cols();
  EmbeddingVector out(2 * d);
  const Eigen::RowVectorXd mean = visual.cast<double>().colwise().mean();
  out.head(d) = mean.transpose().cast<float>();
  out.tail(d) = text.row(0).transpose();
  return out;
}

std::string_view FusionArchName(FusionArch arch) {
  return arch == FusionArch::kMlp ? "mlp" : "transformer";
}

FusionArch ParseFusionArch(std::string_view text) {
  if (text == "mlp") return FusionArch::kMlp;
  if (text == "transformer") return FusionArch::kTransformer;
  Fail(ErrorKind::kInvalidArgument, "unknown fusion architecture '" + std::string(text) + "'");
}

void FusionHead::ZeroGrad() {
  for (auto& p : Params()) p.grad->setZero(p.value->rows(), p.value->cols());
}

void FusionHead::RequireInitialized() const {
  if (!initialized_) Fail(ErrorKind::kUninitializedParams, arch_id() + " parameters are not initialized");
}

MlpHead::MlpHead(MlpDims dims) : dims_(std::move(dims)) {
  int width = dims_.input;
  for (int h : dims_.hidden) {
    dense_.emplace_back(width, h);
    norms_.emplace_back(h);
    relus_.emplace_back();
    width = h;
  }
  output_ = Linear(width, 1);
}

void MlpHead::Initialize(std::uint64_t seed) {
  Rng rng = Rng::Derive(seed, 0xf1a9);
  for (auto& d : dense_) d.Initialize(rng);
  output_.Initialize(rng);
  initialized_ = true;
}

nlohmann::json MlpHead::dims() const { return {{"input", dims_.input}, {"hidden", dims_.hidden}}; }

Vec MlpHead::Forward(const Mat& input, bool train) {
  RequireInitialized();
  Mat x = input;
  for (std::size_t i = 0; i < dense_.size(); ++i) {
    x = relus_[i].Forward(norms_[i].Forward(dense_[i].Forward(x), train));
  }
  return output_.Forward(x).col(0);
}

Mat MlpHead::Backward(const Vec& dlogits) {
  Mat d = output_.Backward(Mat(dlogits));
  for (std::size_t i = dense_.size(); i-- > 0;) {
    d = dense_[i].Backward(norms_[i].Backward(relus_[i].Backward(d)));
  }
  return d;
}

std::vector<ParamRef> MlpHead::Params() {
  std::vector<ParamRef> out;
  for (std::size_t i = 0; i < dense_.size(); ++i) {
    dense_[i].Collect("dense" + std::to_string(i), out);
    norms_[i].Collect("bn" + std::to_string(i), out);
  }
  output_.Collect("output", out);
  return out;
}

std::vector<BufferRef> MlpHead::Buffers() {
  std::vector<BufferRef> out;
  for (std::size_t i = 0; i < norms_.size(); ++i) norms_[i].CollectBuffers("bn" + std::to_string(i), out);
  return out;
}

TransformerHead::TransformerHead(TransformerDims dims)
    : dims_(dims),
      input_norm_(dims.model),
      attention_(dims.model, dims.heads),
      widen_(dims.model, dims.wide),
      widen2_(dims.wide, dims.wide),
      head_norm_a_(dims.wide),
      head_norm_b_(dims.head_hidden),
      classify_(dims.wide, dims.head_hidden),
      logit_(dims.head_hidden, 1) {}

void TransformerHead::Initialize(std::uint64_t seed) {
  Rng rng = Rng::Derive(seed, 0x7f0e);
  attention_.Initialize(rng);
  widen_.Initialize(rng);
  widen2_.Initialize(rng);
  classify_.Initialize(rng);
  logit_.Initialize(rng);
  initialized_ = true;
}

nlohmann::json TransformerHead::dims() const {
  return {{"model", dims_.model},
          {"heads", dims_.heads},
          {"wide", dims_.wide},
          {"head_hidden", dims_.head_hidden},
          {"tokens", dims_.tokens}};
}

Vec TransformerHead::Forward(const Mat& input, bool /*train*/) {
  RequireInitialized();
  const int tokens = dims_.tokens;
  if (input.cols() != dims_.model || input.rows() % tokens != 0) {
    Fail(ErrorKind::kDimensionMismatch, "transformer head expects rows of " +
                                            std::to_string(tokens) + " tokens x " +
                                            std::to_string(dims_.model));
  }
  const Eigen::Index samples = input.rows() / tokens;
  attention_out_ = attention_.Forward(input_norm_.Forward(input), tokens);
  const Mat wide = widen2_.Forward(widen_relu_.Forward(widen_.Forward(attention_out_)));
  Mat pooled(samples, wide.cols());
  for (Eigen::Index s = 0; s < samples; ++s) {
    pooled.row(s) = wide.middleRows(s * tokens, tokens).colwise().mean();
  }
  const Mat h = head_relu_.Forward(head_norm_b_.Forward(classify_.Forward(head_norm_a_.Forward(pooled))));
  return logit_.Forward(h).col(0);
}

Mat TransformerHead::Backward(const Vec& dlogits) {
  const int tokens = dims_.tokens;
  Mat d = logit_.Backward(Mat(dlogits));
  d = head_norm_a_.Backward(classify_.Backward(head_norm_b_.Backward(head_relu_.Backward(d))));
  Mat dwide(d.rows() * tokens, d.cols());
  for (Eigen::Index s = 0; s < d.rows(); ++s) {
    dwide.middleRows(s * tokens, tokens).rowwise() = d.row(s) / static_cast<double>(tokens);
  }
  Mat da = widen_.Backward(widen_relu_.Backward(widen2_.Backward(dwide)));
  return input_norm_.Backward(attention_.Backward(da));
}

std::vector<ParamRef> TransformerHead::Params() {
  std::vector<ParamRef> out;
  input_norm_.Collect("input_norm", out);
  attention_.Collect("attention", out);
  widen_.Collect("widen", out);
  widen2_.Collect("widen2", out);
  head_norm_a_.Collect("head_norm_a", out);
  classify_.Collect("classify", out);
  head_norm_b_.Collect("head_norm_b", out);
  logit_.Collect("logit", out);
  return out;
}

std::unique_ptr<FusionHead> MakeMlpHead(const MlpDims& dims, std::uint64_t seed) {
  auto head = std::make_unique<MlpHead>(dims);
  head->Initialize(seed);
  return head;
}

std::unique_ptr<FusionHead> MakeTransformerHead(const TransformerDims& dims, std::uint64_t seed) {
  auto head = std::make_unique<TransformerHead>(dims);
  head->Initialize(seed);
  return head;
}

std::unique_ptr<FusionHead> MakeHead(const std::string& arch_id, const nlohmann::json& dims) {
  try {
    if (arch_id == "fn_mlp/v1") {
      MlpDims d;
      d.input = dims.at("input").get<int>();
      d.hidden = dims.at("hidden").get<std::vector<int>>();
      return std::make_unique<MlpHead>(d);
    }
    if (arch_id == "fn_transformer/v1") {
      TransformerDims d;
      d.model = dims.at("model").get<int>();
      d.heads = dims.at("heads").get<int>();
      d.wide = dims.at("wide").get<int>();
      d.head_hidden = dims.at("head_hidden").get<int>();
      d.tokens = dims.at("tokens").get<int>();
      return std::make_unique<TransformerHead>(d);
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kCorruptCheckpoint, std::string("bad head dims: ") + e.what());
  }
  Fail(ErrorKind::kCorruptCheckpoint, "unknown architecture '" + arch_id + "'");
}

}  // namespace vad
