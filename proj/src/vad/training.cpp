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

#include "vad/training.hpp"

#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "vad/error.hpp"
#include "vad/random.hpp"
#include "vad/util.hpp"

#ifndef VADCLIP_GIT_DESCRIBE
#define VADCLIP_GIT_DESCRIBE "unknown"
#endif

namespace vad {

std::string_view CaptionModeName(CaptionMode mode) {
  switch (mode) {
    case CaptionMode::kFixed: return "fixed";
    case CaptionMode::kVariable: return "variable";
    case CaptionMode::kNone: return "none";
  }
  return "fixed";
}

CaptionMode ParseCaptionMode(std::string_view text) {
  if (text == "fixed") return CaptionMode::kFixed;
  if (text == "variable") return CaptionMode::kVariable;
  if (text == "none") return CaptionMode::kNone;
  Fail(ErrorKind::kConfigError, "unknown caption mode '" + std::string(text) + "'");
}

void TrainConfig::Validate() const {
  auto bad = [](const std::string& msg) { Fail(ErrorKind::kConfigError, msg); };
  bool lr_ok = false;
  for (double lr : {1e-2, 1e-3, 1e-4}) {
    if (std::abs(learning_rate - lr) <= 1e-12 * lr) lr_ok = true;
  }
  if (!lr_ok) bad("train.learning_rate must be one of 0.01, 0.001, 0.0001");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    bad("train.weight_decay must be non-negative");
  }
  if (max_epochs < 0) bad("train.max_epochs must be non-negative");
  if (batch_size < 2 || batch_size % 2 != 0) bad("train.batch_size must be even and at least 2");
  if (optimizer != "adam") bad("train.optimizer must be 'adam'");
  if (encoder_mode == EncoderMode::kMock) bad("train.encoder_mode must be pretrained or finetuned");
  if (patience < 0) bad("train.patience must be non-negative");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    bad("train.validation_fraction must lie in (0, 1)");
  }
  if (!std::isfinite(threshold)) bad("train.threshold must be finite");
}

nlohmann::ordered_json TrainConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["learning_rate"] = learning_rate;
  j["weight_decay"] = weight_decay;
  j["max_epochs"] = max_epochs;
  j["batch_size"] = batch_size;
  j["optimizer"] = optimizer;
  j["seed"] = seed;
  j["fusion_arch"] = FusionArchName(fusion_arch);
  j["caption_mode"] = CaptionModeName(caption_mode);
  j["encoder_mode"] = EncoderModeName(encoder_mode);
  j["patience"] = patience;
  j["validation_fraction"] = validation_fraction;
  j["threshold"] = threshold;
  return j;
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.learning_rate = j.at("learning_rate").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.max_epochs = j.at("max_epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.optimizer = j.at("optimizer").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.fusion_arch = ParseFusionArch(j.at("fusion_arch").get<std::string>());
    c.caption_mode = ParseCaptionMode(j.at("caption_mode").get<std::string>());
    c.encoder_mode = ParseEncoderMode(j.at("encoder_mode").get<std::string>());
    c.patience = j.at("patience").get<int>();
    c.validation_fraction = j.at("validation_fraction").get<double>();
    c.threshold = j.at("threshold").get<double>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kCorruptCheckpoint, std::string("train config: ") + e.what());
  }
  return c;
}

void AppendSampleInput(const SampleFeatures& sample, int view, FusionArch arch, bool with_text,
                       Mat& out, Eigen::Index row) {
  const EmbeddingMatrix& visual = sample.visual_views.at(static_cast<std::size_t>(view));
  const Eigen::Index d = visual.cols();
  if (with_text && sample.text.size() != d) {
    Fail(ErrorKind::kShapeMismatch, "segment " + sample.segment_id + " has no text embedding");
  }
  if (arch == FusionArch::kMlp) {
    out.block(row, 0, 1, d) = visual.cast<double>().colwise().mean();
    if (with_text) out.block(row, d, 1, d) = sample.text.cast<double>().transpose();
    return;
  }
  const Eigen::Index t = visual.rows();
  out.block(row, 0, t, d) = visual.cast<double>();
  if (with_text) {
    out.block(row + t, 0, t, d) = sample.text.cast<double>().transpose().replicate(t, 1);
  }
}

Mat AssembleInput(const FeatureSet& features, std::span<const std::size_t> indices,
                  std::span<const int> views, FusionArch arch, bool with_text) {
  if (indices.empty()) return Mat(0, 0);
  const auto& first = features.at(indices[0]).visual();
  const Eigen::Index d = first.cols();
  const Eigen::Index t = first.rows();
  Mat out;
  Eigen::Index per = 1;
  if (arch == FusionArch::kMlp) {
    out.resize(static_cast<Eigen::Index>(indices.size()), with_text ? 2 * d : d);
  } else {
    per = with_text ? 2 * t : t;
    out.resize(static_cast<Eigen::Index>(indices.size()) * per, d);
  }
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& s = features.at(indices[i]);
    if (s.visual().rows() != t || s.visual().cols() != d) {
      Fail(ErrorKind::kShapeMismatch, "segment " + s.segment_id + " has a different visual shape");
    }
    AppendSampleInput(s, views.empty() ? 0 : views[i], arch, with_text, out,
                      static_cast<Eigen::Index>(i) * per);
  }
  return out;
}

std::unique_ptr<FusionHead> MakeHeadFor(const TrainConfig& config) {
  const bool with_text = config.caption_mode != CaptionMode::kNone;
  if (config.fusion_arch == FusionArch::kMlp) {
    return MakeMlpHead(MlpDims::ForInput(with_text ? kFusedVectorDim : kEmbeddingDim), config.seed);
  }
  TransformerDims dims;
  dims.tokens = with_text ? kFusedTokens : kTokensPerFrame;
  return MakeTransformerHead(dims, config.seed);
}

std::string GitDescribe() { return VADCLIP_GIT_DESCRIBE; }

namespace {

TensorFile CaptureState(FusionHead& head, const Adam* adam) {
  TensorFile state;
  for (const auto& p : head.Params()) state.tensors.emplace_back("param." + p.name, *p.value);
  for (const auto& b : head.Buffers()) state.tensors.emplace_back("buffer." + b.name, *b.value);
  if (adam) adam->SaveState(state);
  return state;
}

void LoadState(FusionHead& head, const TensorFile& state) {
  auto load = [&](const std::string& name, Mat* target) {
    const Mat& m = state.At(name);
    if (m.rows() != target->rows() || m.cols() != target->cols()) {
      Fail(ErrorKind::kCorruptCheckpoint, "tensor '" + name + "' has the wrong shape");
    }
    *target = m;
  };
  for (const auto& p : head.Params()) load("param." + p.name, p.value);
  for (const auto& b : head.Buffers()) load("buffer." + b.name, b.value);
  head.mark_initialized();
}

std::vector<std::size_t> TrainIndices(const FoldSpec& fold, const FeatureSet& features) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& person = features[i].person_id;
    if (person == fold.held_out_person) continue;
    if (fold.train_persons.count(person)) out.push_back(i);
  }
  return out;
}

// Stratified slice of `indices`: round(fraction * n) per class, at least one
// when a class has two or more members.
void SplitValidation(const FeatureSet& features, const std::vector<std::size_t>& indices,
                     double fraction, std::uint64_t seed, std::vector<std::size_t>& train,
                     std::vector<std::size_t>& val) {
  std::vector<std::size_t> by_class[2];
  for (auto i : indices) by_class[static_cast<int>(features[i].label)].push_back(i);
  Rng rng(seed);
  std::vector<bool> in_val(features.size(), false);
  for (auto& members : by_class) {
    rng.Shuffle(members);
    std::size_t take = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(members.size())));
    if (take == 0 && members.size() >= 2) take = 1;
    if (take >= members.size()) take = members.size() > 0 ? members.size() - 1 : 0;
    for (std::size_t k = 0; k < take; ++k) in_val[members[k]] = true;
  }
  train.clear();
  val.clear();
  for (auto i : indices) (in_val[i] ? val : train).push_back(i);
}

double MeanLoss(FusionHead& head, const TrainConfig& config, const FeatureSet& features,
                std::span<const std::size_t> indices) {
  const auto preds = Predict(head, config, features, indices);
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    sum += BceWithLogits(preds[i].logit, static_cast<double>(features[indices[i]].label));
  }
  return preds.empty() ? 0.0 : sum / static_cast<double>(preds.size());
}

struct Session {
  const FoldSpec* fold = nullptr;
  TrainConfig config;
  std::vector<std::size_t> train, val;
  std::unique_ptr<FusionHead> head;
  std::unique_ptr<Adam> adam;
  Checkpoint checkpoint;  // metadata; state filled on capture
};

Session OpenSession(const FoldSpec& fold, const TrainConfig& config, const FeatureSet& features,
                    const std::vector<std::size_t>& indices) {
  config.Validate();
  Session s;
  s.fold = &fold;
  s.config = config;
  if (config.patience > 0) {
    SplitValidation(features, indices, config.validation_fraction,
                    Rng::Derive(config.seed, 0x7a11d).NextU64(), s.train, s.val);
  } else {
    s.train = indices;
  }
  s.head = MakeHeadFor(config);
  AdamConfig adam;
  adam.learning_rate = config.learning_rate;
  adam.weight_decay = config.weight_decay;
  s.adam = std::make_unique<Adam>(adam);
  s.checkpoint.arch_id = s.head->arch_id();
  s.checkpoint.dims = s.head->dims();
  s.checkpoint.config = config;
  s.checkpoint.held_out_person = fold.held_out_person;
  s.checkpoint.train_persons.assign(fold.train_persons.begin(), fold.train_persons.end());
  s.checkpoint.git_describe = GitDescribe();
  return s;
}

void RunEpochs(Session& s, const FeatureSet& features, int to_epoch, const TrainHooks& hooks) {
  const TrainConfig& config = s.config;
  const bool with_text = config.caption_mode != CaptionMode::kNone;
  const std::size_t half = static_cast<std::size_t>(config.batch_size / 2);
  std::vector<std::size_t> base_pos, base_neg;
  for (auto i : s.train) {
    (features[i].label == Label::kSpeaking ? base_pos : base_neg).push_back(i);
  }
  const std::size_t batches = std::min(base_pos.size(), base_neg.size()) / half;
  if (batches == 0 && to_epoch > s.checkpoint.epoch) {
    Fail(ErrorKind::kInsufficientData,
         "fold holding out '" + s.fold->held_out_person + "' has " + std::to_string(base_pos.size()) +
             " speaking and " + std::to_string(base_neg.size()) +
             " not_speaking training segments; a balanced batch needs " + std::to_string(half) +
             " of each");
  }

  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  int best_epoch = s.checkpoint.epoch;
  std::optional<Checkpoint> best;
  if (!s.val.empty()) {
    best_val = MeanLoss(*s.head, config, features, s.val);
    best = s.checkpoint;
    best->state = CaptureState(*s.head, s.adam.get());
  }

  std::vector<std::size_t> indices(2 * half);
  std::vector<int> views(2 * half);
  Vec labels(static_cast<Eigen::Index>(2 * half));
  for (int epoch = s.checkpoint.epoch; epoch < to_epoch; ++epoch) {
    // Each epoch reshuffles from the base order so that a resumed run sees
    // the same batches as an uninterrupted one.
    Rng rng = Rng::Derive(config.seed, static_cast<std::uint64_t>(epoch) + 1);
    std::vector<std::size_t> pos = base_pos, neg = base_neg;
    rng.Shuffle(pos);
    rng.Shuffle(neg);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      for (std::size_t k = 0; k < half; ++k) {
        indices[k] = pos[b * half + k];
        indices[half + k] = neg[b * half + k];
      }
      for (std::size_t k = 0; k < indices.size(); ++k) {
        const auto& sample = features[indices[k]];
        if (sample.person_id == s.fold->held_out_person) {
          Fail(ErrorKind::kInternal, "held-out segment " + sample.segment_id + " in a training batch");
        }
        const std::size_t n_views = sample.visual_views.size();
        views[k] = n_views > 1 ? static_cast<int>(rng.Below(n_views)) : 0;
        labels(static_cast<Eigen::Index>(k)) = static_cast<double>(sample.label);
      }
      if (hooks.on_batch) {
        BatchEvent event;
        event.held_out_person = s.fold->held_out_person;
        event.epoch = epoch;
        event.batch = static_cast<int>(b);
        for (auto i : indices) {
          event.segment_ids.push_back(features[i].segment_id);
          event.person_ids.push_back(features[i].person_id);
          (features[i].label == Label::kSpeaking ? event.speaking : event.not_speaking)++;
        }
        hooks.on_batch(event);
      }

      const Mat input = AssembleInput(features, indices, views, config.fusion_arch, with_text);
      s.head->ZeroGrad();
      const Vec logits = s.head->Forward(input, true);
      const auto where = "epoch " + std::to_string(epoch) + " batch " + std::to_string(b) +
                         " (lr " + FormatFixed(config.learning_rate, 4) + ")";
      if (!logits.allFinite()) Fail(ErrorKind::kDivergedLoss, "non-finite logit at " + where);
      BatchLoss loss = BceWithLogitsBatch(logits, labels);
      if (hooks.loss_filter) loss.loss = hooks.loss_filter(loss.loss, epoch, static_cast<int>(b));
      if (!std::isfinite(loss.loss)) Fail(ErrorKind::kDivergedLoss, "non-finite loss at " + where);
      s.head->Backward(loss.grad);
      s.adam->Step(s.head->Params());
      epoch_loss += loss.loss;
    }
    s.checkpoint.epoch = epoch + 1;
    s.checkpoint.loss_history.push_back(epoch_loss / static_cast<double>(batches));
    spdlog::debug("fold {} epoch {} loss {:.6f}", s.fold->held_out_person, epoch + 1,
                  s.checkpoint.loss_history.back());

    if (!s.val.empty()) {
      const double val = MeanLoss(*s.head, config, features, s.val);
      s.checkpoint.val_loss_history.push_back(val);
      if (val < best_val) {
        best_val = val;
        since_best = 0;
        best_epoch = epoch + 1;
        best = s.checkpoint;
        best->state = CaptureState(*s.head, s.adam.get());
      } else if (++since_best >= config.patience) {
        spdlog::info("fold {}: early stop after epoch {}", s.fold->held_out_person, epoch + 1);
        break;
      }
    }
  }
  if (best) {
    // Keep the complete loss curves, but the parameters of the best epoch.
    best->loss_history = s.checkpoint.loss_history;
    best->val_loss_history = s.checkpoint.val_loss_history;
    best->epoch = s.checkpoint.epoch;
    best->state.header["selected_epoch"] = best_epoch;
    s.checkpoint = std::move(*best);
    return;
  }
  s.checkpoint.state = CaptureState(*s.head, s.adam.get());
}

}  // namespace

TensorFile Checkpoint::ToTensorFile() const {
  TensorFile file = state;
  auto& h = file.header;
  h["format"] = "vadclip-checkpoint";
  h["arch_id"] = arch_id;
  h["dims"] = dims;
  h["seed"] = config.seed;
  h["git_describe"] = git_describe;
  h["config"] = config.ToJson();
  h["epoch"] = epoch;
  h["loss_history"] = loss_history;
  h["val_loss_history"] = val_loss_history;
  h["fold"] = {{"held_out_person", held_out_person}, {"train_persons", train_persons}};
  h["backbone"] = backbone;
  return file;
}

Checkpoint Checkpoint::FromTensorFile(TensorFile file) {
  Checkpoint c;
  const auto& h = file.header;
  try {
    if (h.value("format", std::string()) != "vadclip-checkpoint") {
      Fail(ErrorKind::kCorruptCheckpoint, "not a vadclip checkpoint");
    }
    c.arch_id = h.at("arch_id").get<std::string>();
    c.dims = h.at("dims");
    c.config = TrainConfig::FromJson(h.at("config"));
    c.epoch = h.at("epoch").get<int>();
    c.loss_history = h.at("loss_history").get<std::vector<double>>();
    c.val_loss_history = h.at("val_loss_history").get<std::vector<double>>();
    c.held_out_person = h.at("fold").at("held_out_person").get<std::string>();
    c.train_persons = h.at("fold").at("train_persons").get<std::vector<std::string>>();
    c.git_describe = h.at("git_describe").get<std::string>();
    c.backbone = h.value("backbone", nlohmann::json());
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kCorruptCheckpoint, std::string("checkpoint header: ") + e.what());
  }
  c.state = std::move(file);
  return c;
}

void Checkpoint::Save(const std::filesystem::path& path) const {
  SaveTensorFile(ToTensorFile(), path);
}

Checkpoint Checkpoint::Load(const std::filesystem::path& path) {
  return FromTensorFile(LoadTensorFile(path));
}

std::unique_ptr<FusionHead> RestoreHead(const Checkpoint& checkpoint) {
  auto head = MakeHead(checkpoint.arch_id, checkpoint.dims);
  LoadState(*head, checkpoint.state);
  return head;
}

Checkpoint TrainFold(const FoldSpec& fold, const TrainConfig& config, const FeatureSet& features,
                     const TrainHooks& hooks) {
  Session s = OpenSession(fold, config, features, TrainIndices(fold, features));
  RunEpochs(s, features, config.max_epochs, hooks);
  return std::move(s.checkpoint);
}

Checkpoint Resume(const Checkpoint& checkpoint, int additional_epochs, const FeatureSet& features,
                  const TrainHooks& hooks) {
  if (additional_epochs < 0) Fail(ErrorKind::kInvalidArgument, "additional_epochs must be >= 0");
  if (checkpoint.config.patience > 0) {
    Fail(ErrorKind::kConfigError, "resume needs a final-epoch checkpoint (train.patience = 0)");
  }
  FoldSpec fold{checkpoint.held_out_person,
                {checkpoint.train_persons.begin(), checkpoint.train_persons.end()}};
  Session s = OpenSession(fold, checkpoint.config, features, TrainIndices(fold, features));
  if (s.head->arch_id() != checkpoint.arch_id || s.head->dims() != checkpoint.dims) {
    Fail(ErrorKind::kCorruptCheckpoint, "checkpoint architecture does not match its config");
  }
  LoadState(*s.head, checkpoint.state);
  s.adam->LoadState(checkpoint.state);
  s.checkpoint = checkpoint;
  s.checkpoint.config.max_epochs = checkpoint.epoch + additional_epochs;
  s.config.max_epochs = s.checkpoint.config.max_epochs;
  if (additional_epochs == 0) return s.checkpoint;
  RunEpochs(s, features, s.config.max_epochs, hooks);
  return std::move(s.checkpoint);
}

std::vector<PredictionRecord> Predict(FusionHead& head, const TrainConfig& config,
                                      const FeatureSet& features,
                                      std::span<const std::size_t> indices) {
  const bool with_text = config.caption_mode != CaptionMode::kNone;
  std::vector<PredictionRecord> out;
  out.reserve(indices.size());
  constexpr std::size_t kChunk = 256;
  for (std::size_t at = 0; at < indices.size(); at += kChunk) {
    const auto chunk = indices.subspan(at, std::min(kChunk, indices.size() - at));
    const Mat input = AssembleInput(features, chunk, {}, config.fusion_arch, with_text);
    const Vec logits = head.Forward(input, false);
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      const auto& s = features[chunk[k]];
      out.push_back(MakePrediction(s.segment_id, s.person_id, s.label,
                                   logits(static_cast<Eigen::Index>(k)), config.threshold));
    }
  }
  return out;
}

std::vector<PredictionRecord> PredictPerson(FusionHead& head, const TrainConfig& config,
                                            const FeatureSet& features,
                                            const std::string& person_id) {
  std::vector<std::size_t> indices;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].person_id == person_id) indices.push_back(i);
  }
  return Predict(head, config, features, indices);
}

std::vector<SweepRow> Sweep(const std::vector<TrainConfig>& configs, const FoldSpec& fold,
                            const FeatureSet& features,
                            const std::function<TrainHooks(std::size_t)>& hooks_for) {
  if (configs.empty()) Fail(ErrorKind::kInvalidArgument, "sweep needs at least one config");
  std::vector<std::size_t> train, val;
  SplitValidation(features, TrainIndices(fold, features), configs.front().validation_fraction,
                  StableHash(fold.held_out_person), train, val);

  std::vector<SweepRow> rows;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    SweepRow row;
    row.config = configs[c];
    try {
      Session s = OpenSession(fold, configs[c], features, train);
      const TrainHooks hooks = hooks_for ? hooks_for(c) : TrainHooks{};
      RunEpochs(s, features, configs[c].max_epochs, hooks);
      auto head = RestoreHead(s.checkpoint);
      row.train_loss = s.checkpoint.loss_history.empty() ? 0.0 : s.checkpoint.loss_history.back();
      row.val_loss = MeanLoss(*head, configs[c], features, val);
      const auto preds = Predict(*head, configs[c], features, val);
      row.val_f1 = preds.empty() ? 0.0 : F1Score(preds);
      row.ok = true;
    } catch (const Error& e) {
      row.ok = false;
      row.error = std::string(ErrorKindName(e.kind())) + ": " + e.what();
      spdlog::warn("sweep config {} failed: {}", c, row.error);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string RenderSweep(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "| lr | arch | caption | status | train loss | val loss | val F1 |\n";
  out << "|---|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    out << "| " << r.config.learning_rate << " | " << FusionArchName(r.config.fusion_arch) << " | "
        << CaptionModeName(r.config.caption_mode) << " | " << (r.ok ? "ok" : "failed") << " | ";
    if (r.ok) {
      out << FormatFixed(r.train_loss, 4) << " | " << FormatFixed(r.val_loss, 4) << " | "
          << FormatFixed(100.0 * r.val_f1, 2) << " |\n";
    } else {
      out << "- | - | - |\n";
    }
  }
  return out.str();
}

}  // namespace vad
