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

#include "vad/finetune.hpp"

#include <cmath>

#include "vad/error.hpp"
#include "vad/fusion.hpp"
#include "vad/optimizer.hpp"
#include "vad/random.hpp"

namespace vad {

namespace {

// Runs the encoder's frame path but returns the raw backbone features.
class FeatureBackend : public EncoderBackend {
 public:
  std::string name() const override { return "linear-pixel-features"; }
  EncoderMode mode() const override { return EncoderMode::kPretrained; }
  int embedding_dim() const override { return LinearPixelBackend::kFeatureDim; }
  EmbeddingVector EncodeImage(const Image& image) const override {
    return LinearPixelBackend::Features(image).cast<float>();
  }
  EmbeddingVector EncodeText(std::string_view) const override {
    Fail(ErrorKind::kInternal, "feature backend has no text tower");
  }
};

}  // namespace

FinetuneSample PoolSegmentFeatures(const VideoSegment& segment) {
  static const FeatureBackend kFeatures;
  const auto stack = EncodeSegmentStack(segment.frames, kFeatures, segment.segment_id);
  Eigen::VectorXd pooled = Eigen::VectorXd::Zero(LinearPixelBackend::kFeatureDim);
  for (const auto& frame : stack.frames) {
    pooled += frame.cast<double>().colwise().mean().transpose();
  }
  pooled /= static_cast<double>(stack.frames.size());
  return {segment.segment_id, segment.person_id, segment.label, std::move(pooled)};
}

FinetuneResult FinetuneVisualBackbone(const EncoderBackend& base,
                                      const std::vector<FinetuneSample>& samples,
                                      const FinetuneConfig& config) {
  const auto* pixel = dynamic_cast<const LinearPixelBackend*>(&base);
  if (!pixel) {
    Fail(ErrorKind::kBackendNotTrainable,
         "backend '" + base.name() + "' cannot be fine-tuned; use encoder.backend = linear-pixel");
  }
  if (config.batch_size < 2 || config.batch_size % 2) {
    Fail(ErrorKind::kConfigError, "fine-tune batch size must be even");
  }
  const std::size_t half = static_cast<std::size_t>(config.batch_size / 2);
  std::vector<std::size_t> base_pos, base_neg;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    (samples[i].label == Label::kSpeaking ? base_pos : base_neg).push_back(i);
  }
  const std::size_t batches = std::min(base_pos.size(), base_neg.size()) / half;
  if (batches == 0 && config.max_epochs > 0) {
    Fail(ErrorKind::kInsufficientData, "fine-tuning needs " + std::to_string(half) +
                                           " segments of each class");
  }

  Linear projection(pixel->weights().cols(), pixel->weights().rows());
  projection.weight = pixel->weights();
  projection.bias = pixel->bias().transpose();
  auto head = MakeMlpHead(MlpDims::ForInput(static_cast<int>(pixel->weights().rows())), Rng::Derive(config.seed, 0xba5e).NextU64());
  Adam adam({config.learning_rate, 0.9, 0.999, 1e-8, config.weight_decay});

  FinetuneResult result;
  const Eigen::Index feature_dim = pixel->weights().cols();
  Mat x(static_cast<Eigen::Index>(2 * half), feature_dim);
  Vec labels(static_cast<Eigen::Index>(2 * half));
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    Rng rng = Rng::Derive(config.seed, 0xf7000 + static_cast<std::uint64_t>(epoch));
    auto pos = base_pos, neg = base_neg;
    rng.Shuffle(pos);
    rng.Shuffle(neg);
    double total = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      for (std::size_t k = 0; k < 2 * half; ++k) {
        const auto& s = samples[k < half ? pos[b * half + k] : neg[b * half + k - half]];
        x.row(static_cast<Eigen::Index>(k)) = s.pooled.transpose();
        labels(static_cast<Eigen::Index>(k)) = static_cast<double>(s.label);
      }
      head->ZeroGrad();
      projection.ZeroGrad();
      const Mat emb = projection.Forward(x);
      const Vec logits = head->Forward(emb, true);
      if (!logits.allFinite()) {
        Fail(ErrorKind::kDivergedLoss, "fine-tuning diverged at epoch " + std::to_string(epoch));
      }
      const BatchLoss loss = BceWithLogitsBatch(logits, labels);
      projection.Backward(head->Backward(loss.grad));
      auto params = head->Params();
      projection.Collect("backbone", params);
      adam.Step(params);
      total += loss.loss;
    }
    result.loss_history.push_back(total / static_cast<double>(batches));
  }

  auto tuned = std::make_shared<LinearPixelBackend>(*pixel);
  tuned->weights() = projection.weight;
  tuned->bias() = projection.bias.transpose();
  tuned->set_mode(EncoderMode::kFinetuned);
  result.backbone = std::move(tuned);
  return result;
}

void SaveBackbone(const LinearPixelBackend& backbone, const std::filesystem::path& path) {
  TensorFile file;
  file.header["format"] = "vadclip-backbone";
  file.header["name"] = backbone.name();
  file.header["seed"] = backbone.seed();
  file.header["mode"] = EncoderModeName(backbone.mode());
  file.tensors.emplace_back("weight", backbone.weights());
  file.tensors.emplace_back("bias", Mat(backbone.bias()));
  SaveTensorFile(file, path);
}

std::shared_ptr<LinearPixelBackend> LoadBackbone(const std::filesystem::path& path) {
  const TensorFile file = LoadTensorFile(path);
  if (file.header.value("format", std::string()) != "vadclip-backbone") {
    Fail(ErrorKind::kCorruptCheckpoint, path.string() + " is not a backbone checkpoint");
  }
  const Mat& w = file.At("weight");
  const Mat& b = file.At("bias");
  auto backbone = std::make_shared<LinearPixelBackend>(file.header.value("seed", std::uint64_t{0}),
                                                       static_cast<int>(w.rows()));
  if (w.cols() != LinearPixelBackend::kFeatureDim || b.rows() != w.rows() || b.cols() != 1) {
    Fail(ErrorKind::kCorruptCheckpoint, "backbone tensors have the wrong shape");
  }
  backbone->weights() = w;
  backbone->bias() = b.col(0);
  backbone->set_mode(ParseEncoderMode(file.header.value("mode", std::string("finetuned"))));
  return backbone;
}

}  // namespace vad
