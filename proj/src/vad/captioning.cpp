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

#include "vad/captioning.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "vad/error.hpp"
#include "vad/http.hpp"
#include "vad/util.hpp"

namespace vad {

namespace {

constexpr const char* kSpeakingExplanations[] = {
    "The person is speaking because their mouth is open and their lips are moving.",
    "The person appears to be speaking, as they are gesturing and their mouth is open.",
    "Yes, the person is talking; their lips are parted mid-sentence.",
};
constexpr const char* kSilentExplanations[] = {
    "The person is not speaking because their mouth is closed and there is no visible "
    "movement of the lips.",
    "The person is not speaking; they appear to be listening with a neutral expression.",
    "No, the person is silent and their lips are pressed together.",
};

std::string UtcTimestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

SegmentFrames StripLabels(const VideoSegment& segment) {
  return SegmentFrames{segment.segment_id, segment.frames};
}

std::string_view PromptIdName(PromptId id) { return id == PromptId::kP1 ? "P1" : "P2"; }

PromptId ParsePromptId(std::string_view text) {
  if (text == "P1") return PromptId::kP1;
  if (text == "P2") return PromptId::kP2;
  Fail(ErrorKind::kInvalidArgument, "unknown prompt id '" + std::string(text) + "'");
}

PromptSpec PromptSpec::P1() {
  return {PromptId::kP1, "Is the person speaking? Answer with yes or no.", 0.0, 8};
}

PromptSpec PromptSpec::P2() {
  return {PromptId::kP2, "Is the person speaking? Explain why in a few words", 0.2, 50};
}

YesNo ParseYesNo(std::string_view response) {
  std::size_t i = 0;
  while (i < response.size() && std::isspace(static_cast<unsigned char>(response[i]))) ++i;
  auto word_is = [&](std::string_view word) {
    if (response.size() - i < word.size()) return false;
    if (ToLower(response.substr(i, word.size())) != word) return false;
    const std::size_t end = i + word.size();
    return end == response.size() || !std::isalnum(static_cast<unsigned char>(response[end]));
  };
  if (word_is("yes")) return YesNo::kYes;
  if (word_is("no")) return YesNo::kNo;
  Fail(ErrorKind::kUnparseableYesNo, "response is neither yes nor no: '" +
                                         std::string(response.substr(0, 80)) + "'");
}

Caption ToFixedCaption(YesNo answer) {
  Caption c;
  c.text = std::string(answer == YesNo::kYes ? kFixedSpeakingCaption : kFixedSilentCaption);
  c.prompt_id = PromptId::kP1;
  c.source = CaptionSource::kFixed;
  return c;
}

std::size_t CentralFrameIndex(std::size_t length) { return length == 0 ? 0 : (length - 1) / 2; }

std::pair<const Image*, std::size_t> SelectCentralFrame(const SegmentFrames& segment) {
  if (segment.frames.empty()) Fail(ErrorKind::kInvalidArgument, "segment has no frames");
  const std::size_t index = CentralFrameIndex(segment.frames.size());
  return {&segment.frames[index], index};
}

double MockVlmClient::MouthActivity(const Image& frame) {
  const int x0 = frame.width * 35 / 100, x1 = frame.width * 65 / 100;
  const int y0 = frame.height * 55 / 100, y1 = frame.height * 80 / 100;
  double total = 0.0;
  std::size_t n = 0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x + 1 < x1; ++x) {
      for (int c = 0; c < 3; ++c) {
        total += std::abs(static_cast<int>(frame.at(x + 1, y, c)) - frame.at(x, y, c));
        ++n;
      }
    }
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

std::string MockVlmClient::Query(const Image& frame, const PromptSpec& prompt) {
  bool speaking = false;
  switch (behavior_) {
    case Behavior::kAlwaysYes: speaking = true; break;
    case Behavior::kAlwaysNo: speaking = false; break;
    case Behavior::kHeuristic: speaking = MouthActivity(frame) > kActivityThreshold; break;
  }
  if (prompt.id == PromptId::kP1) return speaking ? "Yes." : "No.";
  // Pick a phrasing from the digest so outputs vary but stay reproducible.
  const auto digest = ImageDigest(frame);
  const std::size_t variant = StableHash(digest) % 3;
  return speaking ? kSpeakingExplanations[variant] : kSilentExplanations[variant];
}

FixtureVlmClient::FixtureVlmClient(const std::filesystem::path& path, std::string model)
    : model_(std::move(model)) {
  std::istringstream in(ReadFile(path));
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (Trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      responses_[{j.at("image_sha256").get<std::string>(), j.at("prompt_id").get<std::string>()}] =
          j.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorKind::kMalformedRow,
           "VLM fixture " + path.string() + " line " + std::to_string(row) + ": " + e.what());
    }
  }
}

std::string FixtureVlmClient::Query(const Image& frame, const PromptSpec& prompt) {
  const auto it = responses_.find({ImageDigest(frame), std::string(PromptIdName(prompt.id))});
  if (it == responses_.end()) {
    Fail(ErrorKind::kVlmUnavailable, "no recorded VLM response for this frame and prompt");
  }
  return it->second;
}

HttpVlmClient::HttpVlmClient(std::string endpoint, std::string model, int timeout_ms)
    : model_(std::move(model)), timeout_ms_(timeout_ms) {
  const auto scheme = endpoint.find("://");
  const auto path = endpoint.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path == std::string::npos) {
    base_ = endpoint;
    route_ = "/";
  } else {
    base_ = endpoint.substr(0, path);
    route_ = endpoint.substr(path);
  }
}

std::string HttpVlmClient::Query(const Image& frame, const PromptSpec& prompt) {
  nlohmann::json body;
  body["image_b64"] = Base64Encode(EncodePng(frame));
  body["prompt"] = prompt.text;
  body["temperature"] = prompt.temperature;
  body["max_tokens"] = prompt.max_tokens;
  try {
    const auto reply = HttpPostJson(base_, route_, body, timeout_ms_);
    if (!reply.contains("text") || !reply["text"].is_string()) {
      Fail(ErrorKind::kVlmUnavailable, "VLM reply lacks 'text'");
    }
    return reply["text"].get<std::string>();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kVlmUnavailable) throw;
    Fail(ErrorKind::kVlmUnavailable, e.what());
  }
}

bool HttpVlmClient::Reachable() const { return HttpGetOk(base_, "/health", 2000); }

Caption GenerateCaption(const Image& frame, const PromptSpec& prompt, VlmClient& client,
                        const RetryPolicy& retry, std::string segment_id, int frame_index) {
  std::string raw;
  const int attempts = std::max(1, retry.attempts);
  for (int attempt = 1;; ++attempt) {
    try {
      raw = client.Query(frame, prompt);
      break;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kVlmUnavailable || attempt >= attempts) {
        if (e.kind() == ErrorKind::kVlmUnavailable) {
          Fail(ErrorKind::kVlmUnavailable, "VLM unavailable after " + std::to_string(attempt) +
                                               " attempts: " + e.what());
        }
        throw;
      }
      spdlog::warn("VLM query failed (attempt {}/{}): {}", attempt, attempts, e.what());
      std::this_thread::sleep_for(std::chrono::milliseconds(retry.backoff_ms * attempt));
    }
  }
  Caption c;
  c.prompt_id = prompt.id;
  c.source = CaptionSource::kVlm;
  c.segment_id = std::move(segment_id);
  c.frame_index = frame_index;
  if (prompt.id == PromptId::kP1) {
    c.text = ParseYesNo(raw) == YesNo::kYes ? "yes" : "no";
  } else {
    c.text = NormalizeCaption(raw);
    if (c.text.empty()) Fail(ErrorKind::kEmptyCaption, "VLM returned an empty caption");
  }
  return c;
}

CaptionCache::CaptionCache(std::filesystem::path path) : path_(std::move(path)) {
  std::error_code ec;
  if (!std::filesystem::exists(path_, ec)) return;
  std::istringstream in(ReadFile(path_));
  std::string line;
  while (std::getline(in, line)) {
    if (Trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      CaptionCacheKey key{j.at("image_sha256").get<std::string>(),
                          j.at("prompt_id").get<std::string>(), j.at("model").get<std::string>(),
                          j.at("temperature").get<double>()};
      auto caption = j.at("caption").get<std::string>();
      if (caption.empty()) throw std::runtime_error("empty caption");
      entries_[key] = std::move(caption);
    } catch (const std::exception& e) {
      ++corrupt_lines_;
      spdlog::warn("caption cache {}: skipping corrupt entry ({})", path_.string(), e.what());
    }
  }
}

std::optional<std::string> CaptionCache::Get(const CaptionCacheKey& key) const {
  std::lock_guard<std::mutex> lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void CaptionCache::Put(const CaptionCacheKey& key, int max_tokens, const std::string& caption) {
  nlohmann::ordered_json j;
  j["image_sha256"] = key.image_sha256;
  j["prompt_id"] = key.prompt_id;
  j["model"] = key.model;
  j["temperature"] = key.temperature;
  j["max_tokens"] = max_tokens;
  j["caption"] = caption;
  j["timestamp"] = UtcTimestamp();
  const std::string line = j.dump() + "\n";
  std::lock_guard<std::mutex> lock(mutex_);
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  // One write per line keeps entries whole under concurrent appenders.
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) Fail(ErrorKind::kIoError, "cannot append to caption cache " + path_.string());
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  out.flush();
  entries_[key] = caption;
}

std::size_t CaptionCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.size();
}

Caption CaptionService::CaptionFor(const SegmentFrames& segment, const PromptSpec& prompt) {
  const auto [frame, index] = SelectCentralFrame(segment);
  const CaptionCacheKey key{ImageDigest(*frame), std::string(PromptIdName(prompt.id)),
                            client_.model(), prompt.temperature};
  if (cache_) {
    if (auto hit = cache_->Get(key)) {
      ++cache_hits_;
      Caption c;
      c.text = *hit;
      c.prompt_id = prompt.id;
      c.segment_id = segment.segment_id;
      c.frame_index = static_cast<int>(index);
      return c;
    }
  }
  ++vlm_calls_;
  Caption c = GenerateCaption(*frame, prompt, client_, retry_, segment.segment_id,
                              static_cast<int>(index));
  if (cache_) cache_->Put(key, prompt.max_tokens, c.text);
  return c;
}

Label StandaloneVlmPredict(const SegmentFrames& segment, VlmClient& client,
                           const RetryPolicy& retry) {
  const auto [frame, index] = SelectCentralFrame(segment);
  const Caption c = GenerateCaption(*frame, PromptSpec::P1(), client, retry, segment.segment_id,
                                    static_cast<int>(index));
  return c.text == "yes" ? Label::kSpeaking : Label::kNotSpeaking;
}

Label StandaloneVlmPredict(const SegmentFrames& segment, CaptionService& service) {
  const Caption c = service.CaptionFor(segment, PromptSpec::P1());
  return c.text == "yes" ? Label::kSpeaking : Label::kNotSpeaking;
}

CaptionSimilarityStats ComputeCaptionSimilarity(const std::vector<std::string>& captions,
                                                const EncoderBackend& text_backend, int bins) {
  if (captions.size() < 2) {
    Fail(ErrorKind::kTooFewCaptions, "caption similarity needs at least 2 captions");
  }
  std::vector<EmbeddingVector> vecs;
  vecs.reserve(captions.size());
  for (const auto& c : captions) vecs.push_back(EncodeText(c, text_backend).vector);
  CaptionSimilarityStats stats;
  stats.histogram.assign(static_cast<std::size_t>(bins), 0);
  double total = 0.0;
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    for (std::size_t j = i + 1; j < vecs.size(); ++j) {
      const double cos = CosineSimilarity(vecs[i], vecs[j]);
      total += cos;
      ++stats.pairs;
      auto bin = static_cast<long>(std::floor((cos + 1.0) / 2.0 * bins));
      bin = std::clamp(bin, 0L, static_cast<long>(bins - 1));
      ++stats.histogram[static_cast<std::size_t>(bin)];
    }
  }
  stats.mean_pairwise_cosine = total / static_cast<double>(stats.pairs);
  return stats;
}

}  // namespace vad
