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

#ifndef VADCLIP_VAD_FUSION_HPP_
#define VADCLIP_VAD_FUSION_HPP_

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vad/encoders.hpp"
#include "vad/layers.hpp"

namespace vad {

inline constexpr int kFusedTokens = 2 * kTokensPerFrame;
inline constexpr int kFusedVectorDim = 2 * kEmbeddingDim;

// Rows 0..9 visual tokens, rows 10..19 the replicated text embedding.
// Throws kShapeMismatch on unequal shapes or non-identical text rows.
EmbeddingMatrix FuseForTransformer(const EmbeddingMatrix& visual, const EmbeddingMatrix& text);

// [mean of visual rows || text row 0].
EmbeddingVector FuseForMlp(const EmbeddingMatrix& visual, const EmbeddingMatrix& text);

enum class FusionArch { kMlp, kTransformer };

std::string_view FusionArchName(FusionArch arch);
FusionArch ParseFusionArch(std::string_view text);

class FusionHead {
 public:
  virtual ~FusionHead() = default;

  virtual std::string arch_id() const = 0;
  virtual nlohmann::json dims() const = 0;

  // MLP: one row per sample. Transformer: tokens() consecutive rows per
  // sample. Returns one logit per sample. A training-mode forward caches
  // what Backward needs.
  virtual Vec Forward(const Mat& input, bool train) = 0;
  // Accumulates parameter gradients; returns d loss / d input.
  virtual Mat Backward(const Vec& dlogits) = 0;

  virtual std::vector<ParamRef> Params() = 0;
  virtual std::vector<BufferRef> Buffers() { return {}; }

  // Rows of input per sample.
  virtual int rows_per_sample() const { return 1; }

  void ZeroGrad();
  bool initialized() const { return initialized_; }
  void mark_initialized() { initialized_ = true; }

 protected:
  void RequireInitialized() const;

  bool initialized_ = false;
};

struct MlpDims {
  int input = kFusedVectorDim;
  // Each hidden layer is dense -> batch norm -> ReLU; a final dense layer
  // maps the last width to the logit. The default keeps the first layer at
  // the input width: 1024 -> 1024 -> 512 -> 256 -> 1.
  std::vector<int> hidden = {kFusedVectorDim, 512, 256};

  static MlpDims ForInput(int input) { return {input, {input, 512, 256}}; }
};

class MlpHead : public FusionHead {
 public:
  explicit MlpHead(MlpDims dims = {});

  void Initialize(std::uint64_t seed);

  std::string arch_id() const override { return "fn_mlp/v1"; }
  nlohmann::json dims() const override;
  Vec Forward(const Mat& input, bool train) override;
  Mat Backward(const Vec& dlogits) override;
  std::vector<ParamRef> Params() override;
  std::vector<BufferRef> Buffers() override;

  const MlpDims& layout() const { return dims_; }

 private:
  MlpDims dims_;
  std::vector<Linear> dense_;
  std::vector<BatchNorm> norms_;
  std::vector<Relu> relus_;
  Linear output_;
};

struct TransformerDims {
  int model = kEmbeddingDim;
  int heads = 2;
  int wide = 768;
  int head_hidden = 128;
  int tokens = kFusedTokens;
};

// LayerNorm -> 2-head self-attention -> dense(model->wide) -> ReLU ->
// dense(wide->wide) -> mean over tokens -> LayerNorm -> dense(wide->hidden)
// -> LayerNorm -> ReLU -> dense(hidden->1).
class TransformerHead : public FusionHead {
 public:
  explicit TransformerHead(TransformerDims dims = {});

  void Initialize(std::uint64_t seed);

  std::string arch_id() const override { return "fn_transformer/v1"; }
  nlohmann::json dims() const override;
  Vec Forward(const Mat& input, bool train) override;
  Mat Backward(const Vec& dlogits) override;
  std::vector<ParamRef> Params() override;
  int rows_per_sample() const override { return dims_.tokens; }

  const TransformerDims& layout() const { return dims_; }
  MultiHeadSelfAttention& attention() { return attention_; }
  // Attention output of the last forward, (samples * tokens) x model.
  const Mat& last_attention_output() const { return attention_out_; }

 private:
  TransformerDims dims_;
  LayerNorm input_norm_;
  MultiHeadSelfAttention attention_;
  Linear widen_, widen2_;
  Relu widen_relu_;
  LayerNorm head_norm_a_, head_norm_b_;
  Linear classify_, logit_;
  Relu head_relu_;
  Mat attention_out_;
};

std::unique_ptr<FusionHead> MakeHead(const std::string& arch_id, const nlohmann::json& dims);
std::unique_ptr<FusionHead> MakeMlpHead(const MlpDims& dims, std::uint64_t seed);
std::unique_ptr<FusionHead> MakeTransformerHead(const TransformerDims& dims, std::uint64_t seed);

}  // namespace vad

#endif  // VADCLIP_VAD_FUSION_HPP_
