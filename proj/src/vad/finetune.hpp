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

#ifndef VADCLIP_VAD_FINETUNE_HPP_
#define VADCLIP_VAD_FINETUNE_HPP_

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "vad/dataset.hpp"
#include "vad/encoders.hpp"
#include "vad/tensor_io.hpp"

namespace vad {

struct FinetuneConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  int max_epochs = 5;
  int batch_size = 128;
  std::uint64_t seed = 0;
};

// Backbone input features of one segment, averaged over the 10 tokens and
// the frames. The pooled embedding is exactly W * pooled + b.
struct FinetuneSample {
  std::string segment_id;
  std::string person_id;
  Label label = Label::kNotSpeaking;
  Eigen::VectorXd pooled;
};

FinetuneSample PoolSegmentFeatures(const VideoSegment& segment);

struct FinetuneResult {
  std::shared_ptr<LinearPixelBackend> backbone;  // mode() == kFinetuned
  std::vector<double> loss_history;
};

// Trains the visual projection jointly with a visual-only probe head on
// the given samples (callers pass training persons only). Throws
// kBackendNotTrainable unless `base` is a LinearPixelBackend, and
// kInsufficientData when no balanced batch fits.
FinetuneResult FinetuneVisualBackbone(const EncoderBackend& base,
                                      const std::vector<FinetuneSample>& samples,
                                      const FinetuneConfig& config);

void SaveBackbone(const LinearPixelBackend& backbone, const std::filesystem::path& path);
std::shared_ptr<LinearPixelBackend> LoadBackbone(const std::filesystem::path& path);

}  // namespace vad

#endif  // VADCLIP_VAD_FINETUNE_HPP_
