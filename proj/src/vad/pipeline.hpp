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

#ifndef VADCLIP_VAD_PIPELINE_HPP_
#define VADCLIP_VAD_PIPELINE_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vad/captioning.hpp"
#include "vad/config.hpp"
#include "vad/embedding_cache.hpp"
#include "vad/encoders.hpp"
#include "vad/protocols.hpp"

namespace vad {

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception
// is rethrown after all workers stop.
void ParallelFor(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

std::shared_ptr<EncoderBackend> MakeEncoderBackend(const Config& config);
std::unique_ptr<VlmClient> MakeVlmClient(const Config& config);
// Cache namespace of a backend: local backends are qualified by seed.
std::string CacheNamespace(const EncoderBackend& backend, const Config& config);

struct DatasetSource {
  std::string name;
  std::filesystem::path annotations;
  std::filesystem::path frames_root;
  std::vector<std::string> person_order;
};

struct Counters {
  std::size_t segments = 0;
  std::size_t visual_encoded = 0;
  std::size_t visual_cached = 0;
  std::size_t text_encoded = 0;
  std::size_t text_cached = 0;
  std::size_t vlm_calls = 0;
  std::size_t caption_hits = 0;
  std::size_t backend_calls = 0;
};

struct IngestResult {
  std::size_t records = 0;
  std::size_t persons = 0;
  std::size_t segments = 0;
  std::size_t padded = 0;
  std::filesystem::path manifest;
};

struct TrainResult {
  std::vector<std::filesystem::path> checkpoints;
};

struct ReportPaths {
  std::filesystem::path markdown;
  std::filesystem::path csv;
  std::filesystem::path json;
  std::filesystem::path predictions;
};

// Per-fold audit of the training batches.
struct LeakageTally {
  std::string held_out_person;
  std::size_t batches = 0;
  std::size_t segments = 0;
  std::size_t held_out_hits = 0;
};

class Pipeline {
 public:
  // Validates the configuration; nothing is written until the first
  // command runs.
  explicit Pipeline(Config config);
  ~Pipeline();

  const Config& config() const { return config_; }
  // <output_root>/<config hash>-<UTC timestamp>[-n], created on first use
  // and never reused.
  const std::filesystem::path& run_dir();

  IngestResult Ingest();
  Counters Embed();
  Counters Caption();
  // One checkpoint per LOPO fold, or only the fold holding out `holdout`;
  // with all_persons a single model on every person.
  TrainResult Train(const std::optional<std::string>& holdout, bool all_persons = false);
  // Uses fold checkpoints from `checkpoints` when given, else trains.
  ProtocolResult EvalLopo(const std::optional<std::filesystem::path>& checkpoints = std::nullopt);
  ProtocolResult EvalCross(bool allow_same);
  ProtocolResult BaselineVlm();
  ReportPaths WriteReport(const ProtocolResult& result);

  const Counters& counters() const { return counters_; }
  const std::vector<LeakageTally>& leakage() const { return leakage_; }

 private:
  struct Loaded;
  DatasetSource Source(bool test) const;
  const Loaded& Load(bool test);
  void CollectCaptions(const Loaded& data);
  FeatureSet BuildFeatures(const Loaded& data, const EncoderBackend& visual, bool with_visual,
                           bool with_text);
  const FeatureSet& FoldFeatures(const FoldSpec& fold, nlohmann::json* backbone_ref);
  TrainHooks MakeHooks();
  void WriteLeakageLog();

  Config config_;
  TrainConfig train_;
  int jobs_ = 1;
  std::optional<std::filesystem::path> run_dir_;
  std::shared_ptr<EncoderBackend> backend_;
  std::shared_ptr<CountingBackend> counted_;
  std::unique_ptr<VlmClient> vlm_;
  std::unique_ptr<EmbeddingCache> embedding_cache_;
  std::unique_ptr<CaptionCache> caption_cache_;
  std::map<bool, std::unique_ptr<Loaded>> loaded_;
  std::unique_ptr<FeatureSet> base_features_;
  FeatureSet fold_features_;
  Counters counters_;
  std::vector<LeakageTally> leakage_;
};

struct DoctorReport {
  std::string text;
  int warnings = 0;
  int problems = 0;
};

// Never throws for unreachable backends or damaged caches; those become
// warnings and problems in the text.
DoctorReport RunDoctor(const Config& config);

}  // namespace vad

#endif  // VADCLIP_VAD_PIPELINE_HPP_
