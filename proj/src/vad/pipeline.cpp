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

#include "vad/pipeline.hpp"

#include <atomic>
#include <ctime>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "vad/error.hpp"
#include "vad/finetune.hpp"
#include "vad/util.hpp"

namespace vad {

namespace fs = std::filesystem;

void ParallelFor(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first;
  std::mutex mutex;
  auto worker = [&] {
    while (!stop) {
      const std::size_t i = next++;
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mutex);
        if (!first) first = std::current_exception();
        stop = true;
      }
    }
  };
  std::vector<std::thread> threads;
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  for (std::size_t t = 0; t < count; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first) std::rethrow_exception(first);
}

std::shared_ptr<EncoderBackend> MakeEncoderBackend(const Config& config) {
  const auto& kind = config.GetString("encoder.backend");
  const auto seed = static_cast<std::uint64_t>(config.GetInt("encoder.seed"));
  if (kind == "mock") return std::make_shared<MockBackend>(seed);
  if (kind == "linear-pixel") return std::make_shared<LinearPixelBackend>(seed);
  if (kind == "remote") {
    if (config.GetString("encoder.endpoint").empty()) {
      Fail(ErrorKind::kConfigError, "encoder.backend = remote needs encoder.endpoint");
    }
    return std::make_shared<RemoteBackend>(config.GetString("encoder.endpoint"),
                                           config.GetString("encoder.model"));
  }
  Fail(ErrorKind::kConfigError, "unknown encoder.backend '" + kind + "'");
}

std::unique_ptr<VlmClient> MakeVlmClient(const Config& config) {
  const auto& kind = config.GetString("vlm.client");
  if (kind == "mock") {
    const auto& b = config.GetString("vlm.mock_behavior");
    MockVlmClient::Behavior behavior;
    if (b == "heuristic") behavior = MockVlmClient::Behavior::kHeuristic;
    else if (b == "always_yes") behavior = MockVlmClient::Behavior::kAlwaysYes;
    else if (b == "always_no") behavior = MockVlmClient::Behavior::kAlwaysNo;
    else Fail(ErrorKind::kConfigError, "unknown vlm.mock_behavior '" + b + "'");
    return std::make_unique<MockVlmClient>(behavior, "mock-" + b + "-" + config.GetString("vlm.model"));
  }
  if (kind == "http") {
    if (config.GetString("vlm.endpoint").empty()) {
      Fail(ErrorKind::kConfigError, "vlm.client = http needs vlm.endpoint");
    }
    return std::make_unique<HttpVlmClient>(config.GetString("vlm.endpoint"),
                                           config.GetString("vlm.model"),
                                           static_cast<int>(config.GetInt("vlm.timeout_ms")));
  }
  if (kind == "fixture") {
    return std::make_unique<FixtureVlmClient>(config.GetPath("vlm.fixture"),
                                              "fixture-" + config.GetString("vlm.model"));
  }
  Fail(ErrorKind::kConfigError, "unknown vlm.client '" + kind + "'");
}

std::string CacheNamespace(const EncoderBackend& backend, const Config& config) {
  const auto& kind = config.GetString("encoder.backend");
  if (kind == "remote") return backend.name();
  return backend.name() + "-s" + config.GetString("encoder.seed");
}

namespace {

std::string FileSafe(std::string_view text) {
  std::string out;
  for (char c : text) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  return out.empty() ? "_" : out;
}

std::string UtcStamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& part : Split(text, ',')) {
    const auto t = Trim(part);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

PromptSpec PromptFor(CaptionMode mode) {
  return mode == CaptionMode::kVariable ? PromptSpec::P2() : PromptSpec::P1();
}

// Final caption text for a generated answer.
std::string ResolveCaption(const Caption& caption) {
  if (caption.prompt_id == PromptId::kP1) return ToFixedCaption(ParseYesNo(caption.text)).text;
  return caption.text;
}

}  // namespace

struct Pipeline::Loaded {
  DatasetSource source;
  AnnotationTable table;
  std::vector<SegmentPlan> plans;
  std::vector<std::string> persons;
  std::map<std::string, std::string> captions;  // segment id -> caption text
  bool captions_ready = false;
  std::vector<FinetuneSample> pooled;
};

Pipeline::Pipeline(Config config) : config_(std::move(config)) {
  train_ = config_.train();
  jobs_ = static_cast<int>(config_.GetInt("run.jobs"));
  if (jobs_ < 1) Fail(ErrorKind::kConfigError, "run.jobs must be at least 1");
  if (config_.GetInt("data.segment_length") < 1) {
    Fail(ErrorKind::kConfigError, "data.segment_length must be at least 1");
  }
  if (config_.GetInt("data.augment_views") < 0) {
    Fail(ErrorKind::kConfigError, "data.augment_views must be non-negative");
  }
  ParseStdKind(config_.GetString("eval.std"));
  const auto& policy = config_.GetString("encoder.token_policy");
  if (policy != "error" && policy != "truncate") {
    Fail(ErrorKind::kConfigError, "encoder.token_policy must be error or truncate");
  }
  backend_ = MakeEncoderBackend(config_);
  counted_ = std::make_shared<CountingBackend>(backend_);
  embedding_cache_ = std::make_unique<EmbeddingCache>(config_.GetPath("encoder.cache_dir"));
}

Pipeline::~Pipeline() = default;

const fs::path& Pipeline::run_dir() {
  if (run_dir_) return *run_dir_;
  const fs::path root = config_.GetPath("run.output_root");
  const std::string stem = config_.Hash() + "-" + UtcStamp();
  fs::path dir = root / stem;
  for (int n = 1; fs::exists(dir); ++n) dir = root / (stem + "-" + std::to_string(n));
  fs::create_directories(dir);
  WriteFileAtomic(dir / "config.resolved.toml", config_.Dump());
  spdlog::info("run directory {}", dir.string());
  run_dir_ = dir;
  return *run_dir_;
}

DatasetSource Pipeline::Source(bool test) const {
  DatasetSource s;
  const std::string prefix = test ? "data.test_" : "data.";
  s.name = config_.GetString(test ? "data.test_dataset" : "data.dataset");
  s.annotations = config_.GetPath(prefix + "annotations");
  s.frames_root = config_.GetPath(prefix + "frames_root");
  if (!test) s.person_order = SplitList(config_.GetString("data.person_order"));
  if (s.annotations.empty() || s.frames_root.empty()) {
    Fail(ErrorKind::kConfigError, std::string(test ? "data.test_annotations and data.test_frames_root"
                                                   : "data.annotations and data.frames_root") +
                                      " must be set");
  }
  if (test && s.name.empty()) s.name = "test";
  return s;
}

const Pipeline::Loaded& Pipeline::Load(bool test) {
  auto& slot = loaded_[test];
  if (slot) return *slot;
  auto data = std::make_unique<Loaded>();
  data->source = Source(test);
  data->table = LoadAnnotations(data->source.annotations);
  if (!test) {
    const auto& expected = config_.GetString("data.annotations_sha256");
    if (!expected.empty() && Sha256File(data->source.annotations) != expected) {
      spdlog::warn("annotation checksum differs from data.annotations_sha256");
    }
  }
  data->plans = PlanSegments(data->table, static_cast<int>(config_.GetInt("data.segment_length")));
  data->persons = data->source.person_order.empty() ? data->table.person_order
                                                    : data->source.person_order;
  std::set<std::string> known(data->table.person_order.begin(), data->table.person_order.end());
  for (const auto& p : data->persons) {
    if (!known.count(p)) Fail(ErrorKind::kConfigError, "data.person_order names unknown person '" + p + "'");
  }
  slot = std::move(data);
  return *slot;
}

IngestResult Pipeline::Ingest() {
  const Loaded& data = Load(false);
  IngestResult r;
  r.records = data.table.size();
  r.persons = data.table.person_order.size();
  r.segments = data.plans.size();
  for (const auto& plan : data.plans) {
    r.padded += plan.padded ? 1 : 0;
    for (auto f : plan.frame_indices) {
      const auto path = FramePath(data.source.frames_root, plan.video_id, plan.person_id, f);
      if (!fs::is_regular_file(path)) {
        Fail(ErrorKind::kMissingFrameImage, "missing frame image " + path.string() + " (segment " +
                                                plan.segment_id + ")");
      }
    }
  }
  r.manifest = run_dir() / "manifest.jsonl";
  WriteManifest(data.plans, r.manifest);
  return r;
}

void Pipeline::CollectCaptions(const Loaded& const_data) {
  auto& data = const_cast<Loaded&>(const_data);
  if (data.captions_ready || train_.caption_mode == CaptionMode::kNone) return;
  if (!vlm_) vlm_ = MakeVlmClient(config_);
  if (!caption_cache_) caption_cache_ = std::make_unique<CaptionCache>(config_.GetPath("captioning.cache"));
  RetryPolicy retry{static_cast<int>(config_.GetInt("captioning.retries")),
                    static_cast<int>(config_.GetInt("captioning.backoff_ms"))};
  CaptionService service(*vlm_, caption_cache_.get(), retry);
  const PromptSpec prompt = PromptFor(train_.caption_mode);
  std::vector<std::string> texts(data.plans.size());
  ParallelFor(data.plans.size(), jobs_, [&](std::size_t i) {
    const VideoSegment segment = LoadSegment(data.plans[i], data.source.frames_root);
    texts[i] = ResolveCaption(service.CaptionFor(StripLabels(segment), prompt));
  });
  for (std::size_t i = 0; i < texts.size(); ++i) data.captions[data.plans[i].segment_id] = texts[i];
  data.captions_ready = true;
  counters_.vlm_calls += service.vlm_calls();
  counters_.caption_hits += service.cache_hits();
}

FeatureSet Pipeline::BuildFeatures(const Loaded& data, const EncoderBackend& visual,
                                   bool with_visual, bool with_text) {
  with_text = with_text && train_.caption_mode != CaptionMode::kNone;
  if (with_text) CollectCaptions(data);
  const int views = 1 + static_cast<int>(config_.GetInt("data.augment_views"));
  const std::string visual_ns = CacheNamespace(visual, config_);
  const std::string visual_mode(EncoderModeName(visual.mode()));
  const std::string text_ns = CacheNamespace(*backend_, config_);
  const std::string text_mode(EncoderModeName(backend_->mode()));
  const TokenPolicy policy = config_.GetString("encoder.token_policy") == "truncate"
                                 ? TokenPolicy::kTruncate
                                 : TokenPolicy::kError;
  const std::size_t calls_before = counted_->image_calls() + counted_->text_calls();
  std::atomic<std::size_t> v_enc{0}, v_hit{0}, t_enc{0}, t_hit{0};

  FeatureSet out(data.plans.size());
  ParallelFor(data.plans.size(), jobs_, [&](std::size_t i) {
    const SegmentPlan& plan = data.plans[i];
    SampleFeatures& s = out[i];
    s.segment_id = plan.segment_id;
    s.person_id = plan.person_id;
    s.label = plan.label;
    s.padded = plan.padded;
    if (with_visual) {
      const VideoSegment segment = LoadSegment(plan, data.source.frames_root);
      std::string digests;
      for (const auto& f : segment.frames) digests += ImageDigest(f);
      for (int v = 0; v < views; ++v) {
        const std::uint64_t aug_seed =
            Rng::Derive(train_.seed, StableHash(plan.segment_id) + static_cast<std::uint64_t>(v))
                .NextU64();
        std::string id = plan.segment_id + "@" + Sha256Hex(digests).substr(0, 16);
        if (v > 0) id += "~aug" + std::to_string(v) + "-" + std::to_string(aug_seed);
        const CacheKey key{id, visual_ns, visual_mode};
        if (auto hit = embedding_cache_->Get(key)) {
          s.visual_views.push_back(std::move(*hit));
          ++v_hit;
          continue;
        }
        const VideoSegment frames = v == 0 ? segment : Augment(segment, aug_seed);
        auto emb = EncodeSegment(frames.frames, visual, plan.segment_id);
        embedding_cache_->Put(key, emb.tokens);
        s.visual_views.push_back(std::move(emb.tokens));
        ++v_enc;
      }
    }
    if (with_text) {
      const std::string& caption = data.captions.at(plan.segment_id);
      const CacheKey key{TextCacheId(caption), text_ns, text_mode};
      if (auto hit = embedding_cache_->Get(key)) {
        s.text = hit->row(0).transpose();
        ++t_hit;
      } else {
        const auto emb = EncodeText(caption, *counted_, policy);
        EmbeddingMatrix row(1, emb.vector.size());
        row.row(0) = emb.vector.transpose();
        embedding_cache_->Put(key, row);
        s.text = emb.vector;
        ++t_enc;
      }
    }
  });
  embedding_cache_->Flush();
  counters_.segments = data.plans.size();
  counters_.visual_encoded += v_enc;
  counters_.visual_cached += v_hit;
  counters_.text_encoded += t_enc;
  counters_.text_cached += t_hit;
  counters_.backend_calls += counted_->image_calls() + counted_->text_calls() - calls_before;
  return out;
}

Counters Pipeline::Embed() {
  const Loaded& data = Load(false);
  BuildFeatures(data, *counted_, true, false);
  return counters_;
}

Counters Pipeline::Caption() {
  const Loaded& data = Load(false);
  if (train_.caption_mode == CaptionMode::kNone) {
    spdlog::warn("captioning.mode = none; nothing to caption");
    return counters_;
  }
  BuildFeatures(data, *counted_, false, true);
  return counters_;
}

namespace {

std::shared_ptr<LinearPixelBackend> Finetune(const EncoderBackend& base,
                                             const std::vector<FinetuneSample>& pooled,
                                             const std::set<std::string>& persons,
                                             const TrainConfig& train, const Config& config) {
  std::vector<FinetuneSample> samples;
  for (const auto& s : pooled) {
    if (persons.count(s.person_id)) samples.push_back(s);
  }
  FinetuneConfig fc;
  fc.learning_rate = config.GetDouble("encoder.finetune_learning_rate");
  fc.weight_decay = train.weight_decay;
  fc.max_epochs = static_cast<int>(config.GetInt("encoder.finetune_epochs"));
  fc.batch_size = train.batch_size;
  fc.seed = train.seed;
  auto result = FinetuneVisualBackbone(base, samples, fc);
  if (!result.loss_history.empty()) {
    spdlog::info("backbone fine-tuned: loss {:.4f} -> {:.4f}", result.loss_history.front(),
                 result.loss_history.back());
  }
  return result.backbone;
}

}  // namespace

const FeatureSet& Pipeline::FoldFeatures(const FoldSpec& fold, nlohmann::json* backbone_ref) {
  const Loaded& data = Load(false);
  if (train_.encoder_mode != EncoderMode::kFinetuned) {
    if (!base_features_) {
      base_features_ = std::make_unique<FeatureSet>(BuildFeatures(data, *counted_, true, true));
    }
    return *base_features_;
  }
  if (!backend_->trainable()) {
    Fail(ErrorKind::kBackendNotTrainable, "encoder.mode = finetuned needs a trainable backend; '" +
                                              backend_->name() + "' is not");
  }
  auto& mutable_data = const_cast<Loaded&>(data);
  if (mutable_data.pooled.empty()) {
    mutable_data.pooled.resize(data.plans.size());
    ParallelFor(data.plans.size(), jobs_, [&](std::size_t i) {
      mutable_data.pooled[i] = PoolSegmentFeatures(LoadSegment(data.plans[i], data.source.frames_root));
    });
  }
  std::set<std::string> persons = fold.train_persons;
  persons.erase(fold.held_out_person);
  auto tuned = Finetune(*backend_, data.pooled, persons, train_, config_);

  const std::string tag = fold.held_out_person.empty() ? "all" : FileSafe(fold.held_out_person);
  const fs::path dir = run_dir() / "checkpoints";
  fs::create_directories(dir);
  const fs::path file = "backbone-" + tag + ".vbb";
  SaveBackbone(*tuned, dir / file);
  // Probe: the first segment's embedding must move away from the
  // pretrained one.
  if (!data.plans.empty()) {
    const auto segment = LoadSegment(data.plans.front(), data.source.frames_root);
    const auto before = EncodeSegment(segment.frames, *backend_).tokens;
    const auto after = EncodeSegment(segment.frames, *tuned).tokens;
    nlohmann::ordered_json probe;
    probe["segment_id"] = segment.segment_id;
    probe["pretrained"] = backend_->name();
    probe["finetuned"] = tuned->name();
    probe["max_abs_difference"] = (before - after).cwiseAbs().maxCoeff();
    probe["differs"] = before != after;
    WriteFileAtomic(dir / ("probe-" + tag + ".json"), probe.dump(2) + "\n");
  }
  if (backbone_ref) {
    *backbone_ref = {{"file", file.string()}, {"name", tuned->name()}};
  }
  fold_features_ = BuildFeatures(data, *tuned, true, true);
  return fold_features_;
}

TrainHooks Pipeline::MakeHooks() {
  TrainHooks hooks;
  hooks.on_batch = [this](const BatchEvent& e) {
    if (leakage_.empty() || leakage_.back().held_out_person != e.held_out_person) {
      leakage_.push_back({e.held_out_person});
    }
    auto& t = leakage_.back();
    ++t.batches;
    t.segments += e.person_ids.size();
    for (const auto& p : e.person_ids) t.held_out_hits += p == e.held_out_person ? 1 : 0;
  };
  return hooks;
}

void Pipeline::WriteLeakageLog() {
  std::string out;
  for (const auto& t : leakage_) {
    nlohmann::ordered_json j;
    j["held_out_person"] = t.held_out_person;
    j["batches"] = t.batches;
    j["segments"] = t.segments;
    j["held_out_hits"] = t.held_out_hits;
    out += j.dump() + "\n";
  }
  WriteFileAtomic(run_dir() / "leakage.jsonl", out);
}

TrainResult Pipeline::Train(const std::optional<std::string>& holdout, bool all_persons) {
  const Loaded& data = Load(false);
  std::vector<FoldSpec> folds;
  if (all_persons) {
    FoldSpec all;
    all.train_persons.insert(data.persons.begin(), data.persons.end());
    folds.push_back(std::move(all));
  } else {
    for (auto& fold : MakeLopoFolds(data.persons)) {
      if (!holdout || fold.held_out_person == *holdout) folds.push_back(std::move(fold));
    }
    if (folds.empty()) Fail(ErrorKind::kConfigError, "--holdout names unknown person '" + *holdout + "'");
  }
  const fs::path dir = run_dir() / "checkpoints";
  fs::create_directories(dir);
  const TrainHooks hooks = MakeHooks();
  TrainResult result;
  for (const auto& fold : folds) {
    nlohmann::json backbone;
    const FeatureSet& features = FoldFeatures(fold, &backbone);
    Checkpoint ckpt = TrainFold(fold, train_, features, hooks);
    ckpt.backbone = backbone;
    const std::string tag = fold.held_out_person.empty() ? "all" : "fold-" + FileSafe(fold.held_out_person);
    const fs::path path = dir / (tag + ".vckp");
    ckpt.Save(path);
    spdlog::info("{}: {} epochs, final loss {:.6f}", tag, ckpt.epoch,
                 ckpt.loss_history.empty() ? 0.0 : ckpt.loss_history.back());
    result.checkpoints.push_back(path);
  }
  WriteLeakageLog();
  return result;
}

ProtocolResult Pipeline::EvalLopo(const std::optional<fs::path>& checkpoints) {
  const Loaded& data = Load(false);
  ProtocolOptions options;
  options.config = train_;
  options.dataset = data.source.name;
  options.std_kind = ParseStdKind(config_.GetString("eval.std"));
  options.person_order = data.persons;
  options.allow_partial = config_.GetBool("eval.allow_partial");
  options.hooks = MakeHooks();
  const fs::path dir = run_dir() / "checkpoints";
  fs::create_directories(dir);
  std::map<std::string, nlohmann::json> backbones;
  options.on_checkpoint = [&](const FoldSpec& fold, const Checkpoint& c) {
    Checkpoint copy = c;
    copy.backbone = backbones[fold.held_out_person];
    copy.Save(dir / ("fold-" + FileSafe(fold.held_out_person) + ".vckp"));
  };

  static const FeatureSet kNone;
  FeatureProvider provider = [&](const FoldSpec& fold) -> const FeatureSet& {
    return FoldFeatures(fold, &backbones[fold.held_out_person]);
  };
  if (checkpoints) {
    provider = [](const FoldSpec&) -> const FeatureSet& { return kNone; };
    options.runner = [&](const FoldSpec& fold, const FeatureSet&) {
      const fs::path path = *checkpoints / ("fold-" + FileSafe(fold.held_out_person) + ".vckp");
      const Checkpoint ckpt = Checkpoint::Load(path);
      if (ckpt.held_out_person != fold.held_out_person) {
        Fail(ErrorKind::kCorruptCheckpoint, path.string() + " holds out '" + ckpt.held_out_person + "'");
      }
      auto head = RestoreHead(ckpt);
      if (ckpt.backbone.is_object()) {
        auto tuned = LoadBackbone(*checkpoints / ckpt.backbone.at("file").get<std::string>());
        fold_features_ = BuildFeatures(data, *tuned, true, true);
        return PredictPerson(*head, ckpt.config, fold_features_, fold.held_out_person);
      }
      if (!base_features_) {
        base_features_ = std::make_unique<FeatureSet>(BuildFeatures(data, *counted_, true, true));
      }
      return PredictPerson(*head, ckpt.config, *base_features_, fold.held_out_person);
    };
  }
  ProtocolResult result = RunLopo(provider, data.persons, options);
  result.report.config = config_.ToJson();
  if (!result.failed.empty()) result.report.config["failed_folds"] = result.failed;
  if (!checkpoints) WriteLeakageLog();
  return result;
}

ProtocolResult Pipeline::EvalCross(bool allow_same) {
  const Loaded& train_data = Load(false);
  const Loaded& test_data = Load(true);
  ProtocolOptions options;
  options.config = train_;
  options.std_kind = ParseStdKind(config_.GetString("eval.std"));
  options.person_order = test_data.persons;
  options.hooks = MakeHooks();
  CrossDatasetOptions cross;
  cross.train_dataset = train_data.source.name;
  cross.test_dataset = test_data.source.name;
  cross.allow_same = allow_same;

  FoldSpec all;
  all.train_persons.insert(train_data.persons.begin(), train_data.persons.end());
  nlohmann::json backbone;
  FeatureSet train_features, test_features;
  if (train_.encoder_mode == EncoderMode::kFinetuned) {
    train_features = FoldFeatures(all, &backbone);
    auto tuned = LoadBackbone(run_dir() / "checkpoints" / backbone.at("file").get<std::string>());
    test_features = BuildFeatures(test_data, *tuned, true, true);
  } else {
    train_features = BuildFeatures(train_data, *counted_, true, true);
    test_features = BuildFeatures(test_data, *counted_, true, true);
  }
  const fs::path dir = run_dir() / "checkpoints";
  fs::create_directories(dir);
  options.on_checkpoint = [&](const FoldSpec&, const Checkpoint& c) {
    Checkpoint copy = c;
    copy.backbone = backbone;
    copy.Save(dir / "all.vckp");
  };
  ProtocolResult result = RunCrossDataset(train_features, test_features, options, cross);
  result.report.config = config_.ToJson();
  WriteLeakageLog();
  return result;
}

ProtocolResult Pipeline::BaselineVlm() {
  const Loaded& data = Load(false);
  if (!vlm_) vlm_ = MakeVlmClient(config_);
  if (!caption_cache_) caption_cache_ = std::make_unique<CaptionCache>(config_.GetPath("captioning.cache"));
  RetryPolicy retry{static_cast<int>(config_.GetInt("captioning.retries")),
                    static_cast<int>(config_.GetInt("captioning.backoff_ms"))};
  CaptionService service(*vlm_, caption_cache_.get(), retry);
  std::vector<PredictionRecord> preds(data.plans.size());
  ParallelFor(data.plans.size(), jobs_, [&](std::size_t i) {
    const auto& plan = data.plans[i];
    const VideoSegment segment = LoadSegment(plan, data.source.frames_root);
    const Label guess = StandaloneVlmPredict(StripLabels(segment), service);
    preds[i] = {plan.segment_id, plan.person_id, plan.label, guess,
                guess == Label::kSpeaking ? 1.0 : -1.0};
  });
  counters_.vlm_calls += service.vlm_calls();
  counters_.caption_hits += service.cache_hits();

  ProtocolResult result;
  result.report.protocol = Protocol::kVlmBaseline;
  result.report.dataset = data.source.name;
  result.report.std_kind = ParseStdKind(config_.GetString("eval.std"));
  for (const auto& person : data.persons) {
    std::vector<PredictionRecord> mine;
    for (const auto& p : preds) {
      if (p.person_id == person) mine.push_back(p);
    }
    result.report.per_person.push_back({person, F1Score(mine)});
    result.predictions.insert(result.predictions.end(), mine.begin(), mine.end());
  }
  result.report.Aggregate();
  result.report.config = config_.ToJson();
  return result;
}

ReportPaths Pipeline::WriteReport(const ProtocolResult& result) {
  ReportPaths paths;
  const fs::path dir = run_dir() / "reports" / FileSafe(result.report.dataset);
  fs::create_directories(dir);
  paths.markdown = dir / (config_.Hash() + ".md");
  paths.csv = dir / (config_.Hash() + ".csv");
  paths.json = run_dir() / "report.json";
  paths.predictions = run_dir() / "predictions.jsonl";
  WriteFileAtomic(paths.markdown, RenderReport(result.report, ReportFormat::kMarkdown));
  WriteFileAtomic(paths.csv, RenderReport(result.report, ReportFormat::kCsv));
  WriteFileAtomic(paths.json, result.report.ToJson().dump(2) + "\n");
  WritePredictions(result.predictions, paths.predictions);
  return paths;
}

DoctorReport RunDoctor(const Config& config) {
  DoctorReport r;
  std::vector<std::string> lines;
  auto line = [&](const std::string& s) { lines.push_back(s); };
  line("config hash: " + config.Hash());

  const fs::path cache_root = config.GetPath("encoder.cache_dir");
  std::error_code ec;
  if (!fs::exists(cache_root, ec)) {
    line("embedding cache: " + cache_root.string() + " (empty)");
  } else {
    const auto entries = EmbeddingCache::Scan(cache_root);
    std::uintmax_t bytes = 0;
    std::size_t bad = 0;
    for (const auto& e : entries) {
      bytes += e.bytes;
      bad += e.ok ? 0 : 1;
    }
    line("embedding cache: " + cache_root.string() + " (" + std::to_string(entries.size()) +
         " entries, " + std::to_string(bytes) + " bytes, " + std::to_string(bad) + " corrupt)");
    for (const auto& e : entries) {
      if (e.ok) continue;
      ++r.problems;
      line("  CORRUPT " + fs::relative(e.path, cache_root, ec).string() + ": " + e.detail);
    }
  }

  const fs::path caption_path = config.GetPath("captioning.cache");
  if (!fs::exists(caption_path, ec)) {
    line("caption cache: " + caption_path.string() + " (empty)");
  } else {
    const CaptionCache cache(caption_path);
    line("caption cache: " + caption_path.string() + " (" + std::to_string(cache.size()) +
         " entries, " + std::to_string(cache.corrupt_lines()) + " corrupt lines)");
    if (cache.corrupt_lines()) ++r.problems;
  }

  const auto& backend = config.GetString("encoder.backend");
  if (backend == "mock" || backend == "linear-pixel") {
    line("encoder backend: " + backend + " (available, mock)");
  } else if (backend == "remote") {
    const RemoteBackend remote(config.GetString("encoder.endpoint"), config.GetString("encoder.model"), 2000);
    if (remote.Reachable()) {
      line("encoder backend: remote " + config.GetString("encoder.endpoint") + " (available, live)");
    } else {
      ++r.warnings;
      line("WARNING encoder backend: remote " + config.GetString("encoder.endpoint") + " unreachable");
    }
  } else {
    ++r.problems;
    line("encoder backend: unknown '" + backend + "'");
  }

  const auto& client = config.GetString("vlm.client");
  if (client == "mock") {
    line("vlm client: mock (available, mock)");
  } else if (client == "fixture") {
    const auto path = config.GetPath("vlm.fixture");
    if (fs::is_regular_file(path, ec)) {
      line("vlm client: fixture " + path.string() + " (available, mock)");
    } else {
      ++r.warnings;
      line("WARNING vlm client: fixture " + path.string() + " missing");
    }
  } else if (client == "http") {
    const HttpVlmClient http(config.GetString("vlm.endpoint"), config.GetString("vlm.model"), 2000);
    if (http.Reachable()) {
      line("vlm client: http " + config.GetString("vlm.endpoint") + " (available, live)");
    } else {
      ++r.warnings;
      line("WARNING vlm client: http " + config.GetString("vlm.endpoint") + " unreachable");
    }
  } else {
    ++r.problems;
    line("vlm client: unknown '" + client + "'");
  }

  const fs::path annotations = config.GetPath("data.annotations");
  if (annotations.empty()) {
    line("annotations: not configured");
  } else if (!fs::is_regular_file(annotations, ec)) {
    ++r.problems;
    line("annotations: " + annotations.string() + " missing");
  } else {
    const std::string actual = Sha256File(annotations);
    const auto& expected = config.GetString("data.annotations_sha256");
    std::string status = "no checksum recorded";
    if (!expected.empty()) {
      status = actual == expected ? "checksum ok" : "CHECKSUM MISMATCH, expected " + expected;
      if (actual != expected) ++r.problems;
    }
    line("annotations: " + annotations.string() + " sha256 " + actual + " (" + status + ")");
  }
  line("summary: " + std::to_string(r.problems) + " problems, " + std::to_string(r.warnings) +
       " warnings");
  for (const auto& l : lines) r.text += l + "\n";
  return r;
}

}  // namespace vad
