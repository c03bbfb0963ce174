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

#ifndef VADCLIP_VAD_TRAINING_HPP_
#define VADCLIP_VAD_TRAINING_HPP_

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vad/dataset.hpp"
#include "vad/encoders.hpp"
#include "vad/fusion.hpp"
#include "vad/metrics.hpp"
#include "vad/optimizer.hpp"
#include "vad/tensor_io.hpp"

namespace vad {

// kNone drops the text half entirely (visual-only heads).
enum class CaptionMode { kFixed, kVariable, kNone };
std::string_view CaptionModeName(CaptionMode mode);
CaptionMode ParseCaptionMode(std::string_view text);

struct TrainConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  int max_epochs = 50;
  int batch_size = 128;
  std::string optimizer = "adam";
  std::uint64_t seed = 0;
  FusionArch fusion_arch = FusionArch::kMlp;
  CaptionMode caption_mode = CaptionMode::kFixed;
  EncoderMode encoder_mode = EncoderMode::kPretrained;
  // Early stopping on a train-split validation slice; 0 keeps the final
  // epoch.
  int patience = 0;
  double validation_fraction = 0.1;
  double threshold = 0.0;

  // Throws kConfigError.
  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static TrainConfig FromJson(const nlohmann::json& j);
};

// One segment's model inputs. visual_views[0] is the clean embedding; any
// further entries are embeddings of augmented copies.
struct SampleFeatures {
  std::string segment_id;
  std::string person_id;
  Label label = Label::kNotSpeaking;
  bool padded = false;
  std::vector<EmbeddingMatrix> visual_views;
  EmbeddingVector text;  // empty under CaptionMode::kNone

  const EmbeddingMatrix& visual() const { return visual_views.front(); }
};
using FeatureSet = std::vector<SampleFeatures>;

// Rows for one sample: MLP takes [mean visual || text] (or the visual mean
// alone without text); the transformer takes the 10 visual tokens followed
// by 10 replicated text tokens.
void AppendSampleInput(const SampleFeatures& sample, int view, FusionArch arch, bool with_text,
                       Mat& out, Eigen::Index row);
Mat AssembleInput(const FeatureSet& features, std::span<const std::size_t> indices,
                  std::span<const int> views, FusionArch arch, bool with_text);

std::unique_ptr<FusionHead> MakeHeadFor(const TrainConfig& config);

struct BatchEvent {
  std::string held_out_person;
  int epoch = 0;
  int batch = 0;
  std::vector<std::string> segment_ids;
  std::vector<std::string> person_ids;
  std::size_t speaking = 0;
  std::size_t not_speaking = 0;
};

struct TrainHooks {
  std::function<void(const BatchEvent&)> on_batch;
  // Replaces the batch loss (fault injection).
  std::function<double(double loss, int epoch, int batch)> loss_filter;
};

struct Checkpoint {
  std::string arch_id;
  nlohmann::json dims;
  TrainConfig config;
  int epoch = 0;
  std::vector<double> loss_history;
  std::vector<double> val_loss_history;
  std::string held_out_person;
  std::vector<std::string> train_persons;
  std::string git_describe;
  nlohmann::json backbone = nullptr;  // fine-tuned backbone reference, if any
  TensorFile state;                   // "param.*", "buffer.*", "adam.*"

  TensorFile ToTensorFile() const;
  static Checkpoint FromTensorFile(TensorFile file);
  void Save(const std::filesystem::path& path) const;
  static Checkpoint Load(const std::filesystem::path& path);
};

std::string GitDescribe();

// Rebuilds the head in eval-ready form. Throws kCorruptCheckpoint.
std::unique_ptr<FusionHead> RestoreHead(const Checkpoint& checkpoint);

// Trains on every feature whose person is in fold.train_persons. Throws
// kInsufficientData, kDivergedLoss.
Checkpoint TrainFold(const FoldSpec& fold, const TrainConfig& config, const FeatureSet& features,
                     const TrainHooks& hooks = {});

// Continues a final-epoch checkpoint on the same features; the result
// equals one uninterrupted run of epoch + additional_epochs.
Checkpoint Resume(const Checkpoint& checkpoint, int additional_epochs, const FeatureSet& features,
                  const TrainHooks& hooks = {});

std::vector<PredictionRecord> Predict(FusionHead& head, const TrainConfig& config,
                                      const FeatureSet& features,
                                      std::span<const std::size_t> indices);
std::vector<PredictionRecord> PredictPerson(FusionHead& head, const TrainConfig& config,
                                            const FeatureSet& features,
                                            const std::string& person_id);

struct SweepRow {
  TrainConfig config;
  bool ok = false;
  std::string error;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_f1 = 0.0;
};

// Trains every config on the fold's train persons minus a stratified
// validation slice and scores it on that slice. A failing config yields a
// row with ok == false.
std::vector<SweepRow> Sweep(const std::vector<TrainConfig>& configs, const FoldSpec& fold,
                            const FeatureSet& features,
                            const std::function<TrainHooks(std::size_t)>& hooks_for = nullptr);
std::string RenderSweep(const std::vector<SweepRow>& rows);

}  // namespace vad

#endif  // VADCLIP_VAD_TRAINING_HPP_
