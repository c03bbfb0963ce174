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

#include "vad/encoders.hpp"

#include <spdlog/spdlog.h>

#include <cctype>
#include <cmath>
#include <cstdio>

#include "vad/error.hpp"
#include "vad/http.hpp"
#include "vad/random.hpp"
#include "vad/util.hpp"

namespace vad {

std::string_view EncoderModeName(EncoderMode mode) {
  switch (mode) {
    case EncoderMode::kPretrained: return "pretrained";
    case EncoderMode::kFinetuned: return "finetuned";
    case EncoderMode::kMock: return "mock";
  }
  return "mock";
}

EncoderMode ParseEncoderMode(std::string_view text) {
  if (text == "pretrained") return EncoderMode::kPretrained;
  if (text == "finetuned") return EncoderMode::kFinetuned;
  if (text == "mock") return EncoderMode::kMock;
  Fail(ErrorKind::kInvalidArgument, "unknown encoder mode '" + std::string(text) + "'");
}

std::vector<std::string> TextTokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

EmbeddingVector HashedTextEmbedding(std::string_view text, int dim, std::uint64_t seed) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
  for (const auto& token : TextTokens(text)) {
    Rng rng = Rng::Derive(seed, StableHash(token));
    for (int i = 0; i < dim; ++i) acc[i] += rng.Normal();
  }
  const double norm = acc.norm();
  if (norm > 0) acc /= norm;
  return acc.cast<float>();
}

EmbeddingVector MockBackend::EncodeImage(const Image& image) const {
  return EmbeddingVector::Constant(dim_, static_cast<float>(MeanIntensity(image) / 255.0));
}

EmbeddingVector MockBackend::EncodeText(std::string_view text) const {
  return HashedTextEmbedding(text, dim_, seed_);
}

LinearPixelBackend::LinearPixelBackend(std::uint64_t seed, int dim)
    : seed_(seed), weights_(dim, kFeatureDim), bias_(Eigen::VectorXd::Zero(dim)) {
  Rng rng = Rng::Derive(seed, 0x11ea7);
  const double scale = 1.0 / std::sqrt(static_cast<double>(kFeatureDim));
  for (int r = 0; r < weights_.rows(); ++r) {
    for (int c = 0; c < weights_.cols(); ++c) weights_(r, c) = rng.Normal() * scale;
  }
}

std::string LinearPixelBackend::name() const {
  if (mode_ == EncoderMode::kFinetuned) return "linear-pixel-ft-" + fingerprint();
  return "linear-pixel";
}

std::string LinearPixelBackend::fingerprint() const {
  std::vector<std::uint8_t> bytes;
  auto append = [&](const double* data, Eigen::Index n) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(data);
    bytes.insert(bytes.end(), p, p + n * sizeof(double));
  };
  append(weights_.data(), weights_.size());
  append(bias_.data(), bias_.size());
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", Crc32(bytes));
  return buf;
}

Eigen::VectorXd LinearPixelBackend::Features(const Image& image) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(kFeatureDim);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(kGrid * kGrid);
  for (int y = 0; y < image.height; ++y) {
    const int gy = y * kGrid / image.height;
    for (int x = 0; x < image.width; ++x) {
      const int gx = x * kGrid / image.width;
      const int cell = gy * kGrid + gx;
      counts[cell] += 1;
      for (int c = 0; c < 3; ++c) f[cell * 3 + c] += image.at(x, y, c);
    }
  }
  for (int cell = 0; cell < kGrid * kGrid; ++cell) {
    for (int c = 0; c < 3; ++c) {
      f[cell * 3 + c] = f[cell * 3 + c] / (255.0 * std::max(1.0, counts[cell])) - 0.5;
    }
  }
  return f;
}

EmbeddingVector LinearPixelBackend::EncodeImage(const Image& image) const {
  return (weights_ * Features(image) + bias_).cast<float>();
}

EmbeddingVector LinearPixelBackend::EncodeText(std::string_view text) const {
  return HashedTextEmbedding(text, embedding_dim(), seed_);
}

RemoteBackend::RemoteBackend(std::string endpoint, std::string model, int timeout_ms)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), timeout_ms_(timeout_ms) {}

EmbeddingVector RemoteBackend::Post(const std::string& route, const std::string& body) const {
  const auto reply = HttpPostJson(endpoint_, route, nlohmann::json::parse(body), timeout_ms_);
  if (!reply.contains("embedding") || !reply["embedding"].is_array()) {
    Fail(ErrorKind::kBackendFailure, "embedding server reply lacks 'embedding'");
  }
  const auto& arr = reply["embedding"];
  EmbeddingVector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<float>();
  if (v.size() != embedding_dim()) {
    Fail(ErrorKind::kBackendFailure, "embedding server returned dim " + std::to_string(v.size()));
  }
  return v;
}

EmbeddingVector RemoteBackend::EncodeImage(const Image& image) const {
  nlohmann::json body;
  body["image_b64"] = Base64Encode(EncodePng(image));
  body["model"] = model_;
  return Post("/embed/image", body.dump());
}

EmbeddingVector RemoteBackend::EncodeText(std::string_view text) const {
  nlohmann::json body;
  body["text"] = std::string(text);
  body["model"] = model_;
  return Post("/embed/text", body.dump());
}

bool RemoteBackend::Reachable() const { return HttpGetOk(endpoint_, "/health", 2000); }

std::array<int, kPatchGrid + 1> PatchEdges(int size) {
  const int cell = size / kPatchGrid;
  return {0, cell, 2 * cell, size};
}

std::array<Image, kPatchGrid * kPatchGrid> PartitionPatches(const Image& frame) {
  if (frame.width != kEncoderInputSize || frame.height != kEncoderInputSize) {
    Fail(ErrorKind::kWrongInputSize, "patch partition needs a 224x224 frame, got " +
                                         std::to_string(frame.width) + "x" +
                                         std::to_string(frame.height));
  }
  const auto edges = PatchEdges();
  std::array<Image, kPatchGrid * kPatchGrid> patches;
  for (int row = 0; row < kPatchGrid; ++row) {
    for (int col = 0; col < kPatchGrid; ++col) {
      patches[row * kPatchGrid + col] =
          Crop(frame, edges[col], edges[row], edges[col + 1] - edges[col],
               edges[row + 1] - edges[row]);
    }
  }
  return patches;
}

FrameEmbedding EncodeFrame(const Image& frame, const EncoderBackend& backend,
                           std::string frame_ref) {
  const int size = backend.input_size();
  const Image resized = Resize(frame, kEncoderInputSize, kEncoderInputSize);
  FrameEmbedding out;
  out.frame_ref = std::move(frame_ref);
  out.tokens.resize(kTokensPerFrame, backend.embedding_dim());
  auto encode = [&](const Image& img, int row) {
    EmbeddingVector v;
    try {
      v = backend.EncodeImage(Resize(img, size, size));
    } catch (const std::exception& e) {
      Fail(ErrorKind::kBackendFailure, "encoder '" + backend.name() + "' failed on frame '" +
                                           out.frame_ref + "': " + e.what());
    }
    if (v.size() != backend.embedding_dim()) {
      Fail(ErrorKind::kBackendFailure, "encoder '" + backend.name() + "' returned dim " +
                                           std::to_string(v.size()));
    }
    out.tokens.row(row) = v.transpose();
  };
  encode(resized, 0);
  const auto patches = PartitionPatches(resized);
  for (int p = 0; p < kPatchGrid * kPatchGrid; ++p) encode(patches[p], p + 1);
  return out;
}

SegmentStack EncodeSegmentStack(std::span<const Image> frames, const EncoderBackend& backend,
                                std::string_view segment_id) {
  SegmentStack stack;
  stack.frames.reserve(frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t) {
    // Padded segments repeat frames; reuse an earlier embedding when pixels match.
    std::size_t same = t;
    for (std::size_t u = 0; u < t; ++u) {
      if (frames[u] == frames[t]) {
        same = u;
        break;
      }
    }
    if (same != t) {
      stack.frames.push_back(stack.frames[same]);
      continue;
    }
    stack.frames.push_back(
        EncodeFrame(frames[t], backend, std::string(segment_id) + "#" + std::to_string(t)).tokens);
  }
  return stack;
}

EmbeddingMatrix TemporalAverage(const SegmentStack& stack) {
  if (stack.frames.empty()) Fail(ErrorKind::kInvalidArgument, "empty segment stack");
  const auto rows = stack.frames[0].rows();
  const auto cols = stack.frames[0].cols();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(rows, cols);
  for (const auto& f : stack.frames) {
    if (f.rows() != rows || f.cols() != cols) {
      Fail(ErrorKind::kShapeMismatch, "frame embeddings differ in shape");
    }
    sum += f.cast<double>();
  }
  sum /= static_cast<double>(stack.frames.size());
  return sum.cast<float>();
}

SegmentVisualEmbedding EncodeSegment(std::span<const Image> frames,
                                     const EncoderBackend& backend, std::string segment_id) {
  SegmentVisualEmbedding out;
  out.tokens = TemporalAverage(EncodeSegmentStack(frames, backend, segment_id));
  out.segment_id = std::move(segment_id);
  return out;
}

std::string NormalizeCaption(std::string_view text) {
  std::string out;
  bool space = false;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(ch);
  }
  return out;
}

TextEmbedding EncodeText(std::string_view caption, const EncoderBackend& backend,
                         TokenPolicy policy) {
  std::string text = NormalizeCaption(caption);
  if (text.empty()) Fail(ErrorKind::kEmptyCaption, "caption is empty");
  const auto tokens = TextTokens(text);
  if (static_cast<int>(tokens.size()) > backend.token_limit()) {
    if (policy == TokenPolicy::kError) {
      Fail(ErrorKind::kTokenLimitExceeded,
           "caption has " + std::to_string(tokens.size()) + " tokens, limit " +
               std::to_string(backend.token_limit()));
    }
    spdlog::warn("caption truncated from {} to {} tokens", tokens.size(), backend.token_limit());
    text.clear();
    for (int i = 0; i < backend.token_limit(); ++i) {
      if (i) text.push_back(' ');
      text += tokens[static_cast<std::size_t>(i)];
    }
  }
  TextEmbedding out;
  try {
    out.vector = backend.EncodeText(text);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    Fail(ErrorKind::kBackendFailure, "text encoder failed: " + std::string(e.what()));
  }
  out.caption = std::move(text);
  return out;
}

EmbeddingMatrix ReplicateText(const EmbeddingVector& vec, int rows) {
  EmbeddingMatrix out(rows, vec.size());
  for (int r = 0; r < rows; ++r) out.row(r) = vec.transpose();
  return out;
}

double CosineSimilarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.size() != b.size()) Fail(ErrorKind::kDimensionMismatch, "cosine of unequal lengths");
  const Eigen::VectorXd x = a.cast<double>();
  const Eigen::VectorXd y = b.cast<double>();
  const double nx = x.norm(), ny = y.norm();
  if (nx == 0.0 || ny == 0.0) Fail(ErrorKind::kZeroNormVector, "cosine of a zero vector");
  return x.dot(y) / (nx * ny);
}

std::vector<double> ZeroShotScore(const EmbeddingVector& visual, const ZeroShotScorer& scorer) {
  if (!(scorer.temperature > 0.0)) {
    Fail(ErrorKind::kInvalidArgument, "temperature must be positive");
  }
  if (scorer.class_embeddings.empty()) {
    Fail(ErrorKind::kInvalidArgument, "zero-shot scorer needs at least one class");
  }
  std::vector<double> logits;
  logits.reserve(scorer.class_embeddings.size());
  for (const auto& cls : scorer.class_embeddings) {
    logits.push_back(CosineSimilarity(visual, cls) / scorer.temperature);
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (auto& l : logits) {
    l = std::exp(l - peak);
    total += l;
  }
  for (auto& l : logits) l /= total;
  return logits;
}

}  // namespace vad
