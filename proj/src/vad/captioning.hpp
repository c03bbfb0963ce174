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

#ifndef VADCLIP_VAD_CAPTIONING_HPP_
#define VADCLIP_VAD_CAPTIONING_HPP_

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "vad/dataset.hpp"
#include "vad/encoders.hpp"
#include "vad/image.hpp"

namespace vad {

// The captioning side only ever sees frames. There is deliberately no
// conversion from VideoSegment: StripLabels() is the one way in.
struct SegmentFrames {
  std::string segment_id;
  std::vector<Image> frames;
};

SegmentFrames StripLabels(const VideoSegment& segment);

enum class PromptId { kP1, kP2 };

std::string_view PromptIdName(PromptId id);
PromptId ParsePromptId(std::string_view text);

struct PromptSpec {
  PromptId id = PromptId::kP1;
  std::string text;
  double temperature = 0.0;
  int max_tokens = 0;

  // Yes/no question, decoded greedily.
  static PromptSpec P1();
  // Free-form explanation, temperature 0.2, at most 50 tokens.
  static PromptSpec P2();
};

inline constexpr std::string_view kFixedSpeakingCaption = "the person is engaged in a conversation";
inline constexpr std::string_view kFixedSilentCaption = "no one is talking";

enum class CaptionSource { kVlm, kFixed };

struct Caption {
  std::string text;
  PromptId prompt_id = PromptId::kP1;
  CaptionSource source = CaptionSource::kVlm;
  std::string segment_id;
  int frame_index = 0;
};

enum class YesNo { kYes, kNo };

// "yes"/"no" (any case) as the first word, after leading whitespace.
// Throws kUnparseableYesNo otherwise.
YesNo ParseYesNo(std::string_view response);

Caption ToFixedCaption(YesNo answer);

// Ordinal ceil(T/2), i.e. 0-based (T-1)/2: frame 4 of a 10-frame segment.
std::size_t CentralFrameIndex(std::size_t length);
std::pair<const Image*, std::size_t> SelectCentralFrame(const SegmentFrames& segment);

class VlmClient {
 public:
  virtual ~VlmClient() = default;
  virtual std::string model() const = 0;
  virtual bool mock() const { return false; }
  // Raw response text. Throws kVlmUnavailable on transport failure. Must be
  // safe to call from several threads.
  virtual std::string Query(const Image& frame, const PromptSpec& prompt) = 0;
};

struct RetryPolicy {
  int attempts = 3;
  int backoff_ms = 200;
};

// Deterministic stand-in that answers from the pixels: a strongly textured
// mouth region (lower-centre of the crop) reads as speaking.
class MockVlmClient : public VlmClient {
 public:
  enum class Behavior { kHeuristic, kAlwaysYes, kAlwaysNo };

  explicit MockVlmClient(Behavior behavior = Behavior::kHeuristic,
                         std::string model = "llava-13b-mock")
      : behavior_(behavior), model_(std::move(model)) {}

  std::string model() const override { return model_; }
  bool mock() const override { return true; }
  std::string Query(const Image& frame, const PromptSpec& prompt) override;

  // Mean absolute horizontal gradient over the mouth region.
  static double MouthActivity(const Image& frame);
  static constexpr double kActivityThreshold = 24.0;

 private:
  Behavior behavior_;
  std::string model_;
};

// Replays recorded responses, JSON-lines {image_sha256, prompt_id, text}.
class FixtureVlmClient : public VlmClient {
 public:
  explicit FixtureVlmClient(const std::filesystem::path& path, std::string model = "fixture");

  std::string model() const override { return model_; }
  bool mock() const override { return true; }
  std::string Query(const Image& frame, const PromptSpec& prompt) override;

 private:
  std::string model_;
  std::map<std::pair<std::string, std::string>, std::string> responses_;
};

// POST {image_b64, prompt, temperature, max_tokens} -> {text}.
class HttpVlmClient : public VlmClient {
 public:
  HttpVlmClient(std::string endpoint, std::string model, int timeout_ms = 60000);

  std::string model() const override { return model_; }
  std::string Query(const Image& frame, const PromptSpec& prompt) override;
  bool Reachable() const;

 private:
  std::string base_;
  std::string route_;
  std::string model_;
  int timeout_ms_;
};

// Wraps a client and counts queries.
class CountingVlmClient : public VlmClient {
 public:
  explicit CountingVlmClient(VlmClient& inner) : inner_(inner) {}
  std::string model() const override { return inner_.model(); }
  bool mock() const override { return inner_.mock(); }
  std::string Query(const Image& frame, const PromptSpec& prompt) override {
    ++calls_;
    return inner_.Query(frame, prompt);
  }
  std::size_t calls() const { return calls_; }

 private:
  VlmClient& inner_;
  std::atomic<std::size_t> calls_{0};
};

// Queries with retries on kVlmUnavailable, then post-processes: P1 answers
// become "yes"/"no", P2 text is whitespace-normalised and must be non-empty.
Caption GenerateCaption(const Image& frame, const PromptSpec& prompt, VlmClient& client,
                        const RetryPolicy& retry = {}, std::string segment_id = {},
                        int frame_index = 0);

struct CaptionCacheKey {
  std::string image_sha256;
  std::string prompt_id;
  std::string model;
  double temperature = 0.0;

  auto tie() const { return std::tie(image_sha256, prompt_id, model, temperature); }
  friend bool operator<(const CaptionCacheKey& a, const CaptionCacheKey& b) {
    return a.tie() < b.tie();
  }
};

// JSON-lines store; one object per entry:
// {image_sha256, prompt_id, model, temperature, max_tokens, caption, timestamp}.
class CaptionCache {
 public:
  explicit CaptionCache(std::filesystem::path path);

  std::optional<std::string> Get(const CaptionCacheKey& key) const;
  void Put(const CaptionCacheKey& key, int max_tokens, const std::string& caption);

  std::size_t size() const;
  std::size_t corrupt_lines() const { return corrupt_lines_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::map<CaptionCacheKey, std::string> entries_;
  std::size_t corrupt_lines_ = 0;
};

// Caches by central-frame digest so the VLM is never asked twice.
class CaptionService {
 public:
  CaptionService(VlmClient& client, CaptionCache* cache, RetryPolicy retry = {})
      : client_(client), cache_(cache), retry_(retry) {}

  Caption CaptionFor(const SegmentFrames& segment, const PromptSpec& prompt);

  std::size_t vlm_calls() const { return vlm_calls_; }
  std::size_t cache_hits() const { return cache_hits_; }

 private:
  VlmClient& client_;
  CaptionCache* cache_;
  RetryPolicy retry_;
  std::atomic<std::size_t> vlm_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

// Prompt 1 on the central frame: yes -> speaking, no -> not speaking.
Label StandaloneVlmPredict(const SegmentFrames& segment, VlmClient& client,
                           const RetryPolicy& retry = {});
Label StandaloneVlmPredict(const SegmentFrames& segment, CaptionService& service);

struct CaptionSimilarityStats {
  double mean_pairwise_cosine = 0.0;
  std::size_t pairs = 0;
  // Counts over [-1, 1] in equal-width bins.
  std::vector<std::size_t> histogram;
};

CaptionSimilarityStats ComputeCaptionSimilarity(const std::vector<std::string>& captions,
                                                const EncoderBackend& text_backend,
                                                int bins = 10);

}  // namespace vad

#endif  // VADCLIP_VAD_CAPTIONING_HPP_
