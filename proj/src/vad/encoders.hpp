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

#ifndef VADCLIP_VAD_ENCODERS_HPP_
#define VADCLIP_VAD_ENCODERS_HPP_

#include <Eigen/Dense>

#include <array>
#include <atomic>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vad/image.hpp"

namespace vad {

using EmbeddingMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EmbeddingVector = Eigen::VectorXf;

inline constexpr int kEmbeddingDim = 512;
inline constexpr int kEncoderInputSize = 224;
inline constexpr int kPatchGrid = 3;
inline constexpr int kTokensPerFrame = 1 + kPatchGrid * kPatchGrid;

enum class EncoderMode { kPretrained, kFinetuned, kMock };

std::string_view EncoderModeName(EncoderMode mode);
EncoderMode ParseEncoderMode(std::string_view text);

// Adapter over an image/text encoder pair sharing one embedding space.
// Implementations must be safe for concurrent const calls.
class EncoderBackend {
 public:
  virtual ~EncoderBackend() = default;

  virtual std::string name() const = 0;
  virtual EncoderMode mode() const = 0;
  virtual int embedding_dim() const { return kEmbeddingDim; }
  virtual int input_size() const { return kEncoderInputSize; }
  virtual int token_limit() const { return 77; }
  virtual bool trainable() const { return false; }

  // `image` is input_size() x input_size().
  virtual EmbeddingVector EncodeImage(const Image& image) const = 0;
  virtual EmbeddingVector EncodeText(std::string_view text) const = 0;
};

// Bag-of-words text embedding: each lowercase alphanumeric token seeds a
// Gaussian vector; the sum is L2-normalised. Shared by the local backends.
EmbeddingVector HashedTextEmbedding(std::string_view text, int dim, std::uint64_t seed);
std::vector<std::string> TextTokens(std::string_view text);

// Image -> vector filled with the mean pixel intensity / 255.
class MockBackend : public EncoderBackend {
 public:
  explicit MockBackend(std::uint64_t seed = 0, int dim = kEmbeddingDim)
      : seed_(seed), dim_(dim) {}

  std::string name() const override { return "mock"; }
  EncoderMode mode() const override { return EncoderMode::kMock; }
  int embedding_dim() const override { return dim_; }
  EmbeddingVector EncodeImage(const Image& image) const override;
  EmbeddingVector EncodeText(std::string_view text) const override;

 private:
  std::uint64_t seed_;
  int dim_;
};

// Linear projection of a 16x16 area-averaged RGB thumbnail. Small enough to
// fine-tune on a desk, but a proper trainable stand-in for a visual tower.
class LinearPixelBackend : public EncoderBackend {
 public:
  static constexpr int kGrid = 16;
  static constexpr int kFeatureDim = kGrid * kGrid * 3;

  explicit LinearPixelBackend(std::uint64_t seed = 0, int dim = kEmbeddingDim);

  std::string name() const override;
  EncoderMode mode() const override { return mode_; }
  int embedding_dim() const override { return static_cast<int>(weights_.rows()); }
  bool trainable() const override { return true; }
  EmbeddingVector EncodeImage(const Image& image) const override;
  EmbeddingVector EncodeText(std::string_view text) const override;

  // Centred thumbnail features in [-0.5, 0.5].
  static Eigen::VectorXd Features(const Image& image);

  Eigen::MatrixXd& weights() { return weights_; }
  Eigen::VectorXd& bias() { return bias_; }
  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& bias() const { return bias_; }

  void set_mode(EncoderMode mode) { mode_ = mode; }
  std::uint64_t seed() const { return seed_; }
  // CRC of the weights; distinguishes fine-tuned variants in cache keys.
  std::string fingerprint() const;

 private:
  std::uint64_t seed_;
  EncoderMode mode_ = EncoderMode::kPretrained;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd bias_;
};

// Live embedding server. POST <endpoint>/embed/image {"image_b64"} and
// POST <endpoint>/embed/text {"text"}; both answer {"embedding": [...]}.
class RemoteBackend : public EncoderBackend {
 public:
  RemoteBackend(std::string endpoint, std::string model, int timeout_ms = 30000);

  std::string name() const override { return "remote-" + model_; }
  EncoderMode mode() const override { return EncoderMode::kPretrained; }
  EmbeddingVector EncodeImage(const Image& image) const override;
  EmbeddingVector EncodeText(std::string_view text) const override;

  // GET <endpoint>/health answers 200.
  bool Reachable() const;

 private:
  EmbeddingVector Post(const std::string& route, const std::string& body) const;

  std::string endpoint_;
  std::string model_;
  int timeout_ms_;
};

// Forwards to another backend and counts calls.
class CountingBackend : public EncoderBackend {
 public:
  explicit CountingBackend(std::shared_ptr<const EncoderBackend> inner)
      : inner_(std::move(inner)) {}

  std::string name() const override { return inner_->name(); }
  EncoderMode mode() const override { return inner_->mode(); }
  int embedding_dim() const override { return inner_->embedding_dim(); }
  int input_size() const override { return inner_->input_size(); }
  int token_limit() const override { return inner_->token_limit(); }
  bool trainable() const override { return inner_->trainable(); }
  EmbeddingVector EncodeImage(const Image& image) const override {
    ++image_calls_;
    return inner_->EncodeImage(image);
  }
  EmbeddingVector EncodeText(std::string_view text) const override {
    ++text_calls_;
    return inner_->EncodeText(text);
  }

  std::size_t image_calls() const { return image_calls_; }
  std::size_t text_calls() const { return text_calls_; }

 private:
  std::shared_ptr<const EncoderBackend> inner_;
  mutable std::atomic<std::size_t> image_calls_{0};
  mutable std::atomic<std::size_t> text_calls_{0};
};

// Row 0 is the whole crop, rows 1..9 the 3x3 patches in row-major order.
struct FrameEmbedding {
  EmbeddingMatrix tokens;
  std::string frame_ref;
};

// T frame embeddings of one segment, before temporal averaging.
struct SegmentStack {
  std::vector<EmbeddingMatrix> frames;
};

struct SegmentVisualEmbedding {
  EmbeddingMatrix tokens;  // kTokensPerFrame x D
  std::string segment_id;
};

struct TextEmbedding {
  EmbeddingVector vector;
  std::string caption;
};

// Pixel bounds of the 3x3 grid along one 224-pixel axis: {0, 74, 148, 224}.
std::array<int, kPatchGrid + 1> PatchEdges(int size = kEncoderInputSize);

// Requires a 224x224 frame; throws kWrongInputSize otherwise.
std::array<Image, kPatchGrid * kPatchGrid> PartitionPatches(const Image& frame);

FrameEmbedding EncodeFrame(const Image& frame, const EncoderBackend& backend,
                           std::string frame_ref = {});

SegmentStack EncodeSegmentStack(std::span<const Image> frames, const EncoderBackend& backend,
                                std::string_view segment_id = {});
EmbeddingMatrix TemporalAverage(const SegmentStack& stack);
SegmentVisualEmbedding EncodeSegment(std::span<const Image> frames,
                                     const EncoderBackend& backend,
                                     std::string segment_id = {});

enum class TokenPolicy { kError, kTruncate };

// Trims and collapses internal whitespace.
std::string NormalizeCaption(std::string_view text);

TextEmbedding EncodeText(std::string_view caption, const EncoderBackend& backend,
                         TokenPolicy policy = TokenPolicy::kError);

EmbeddingMatrix ReplicateText(const EmbeddingVector& vec, int rows = kTokensPerFrame);

double CosineSimilarity(const EmbeddingVector& a, const EmbeddingVector& b);

struct ZeroShotScorer {
  double temperature = 0.01;
  std::vector<EmbeddingVector> class_embeddings;
};

// Softmax over cosine similarities / temperature.
std::vector<double> ZeroShotScore(const EmbeddingVector& visual, const ZeroShotScorer& scorer);

}  // namespace vad

#endif  // VADCLIP_VAD_ENCODERS_HPP_
