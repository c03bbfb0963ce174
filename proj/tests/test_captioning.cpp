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

#include <fstream>
#include <type_traits>

#include "doctest.h"
#include "test_util.hpp"
#include "vad/captioning.hpp"
#include "vad/error.hpp"
#include "vad/image.hpp"
#include "vad/synthetic.hpp"
#include "vad/util.hpp"

namespace vad {
namespace {

// The label cannot reach the captioning side.
template <typename T>
concept HasLabel = requires(T t) { t.label; };
static_assert(!HasLabel<SegmentFrames>);
static_assert(!std::is_constructible_v<SegmentFrames, VideoSegment>);
static_assert(!std::is_convertible_v<VideoSegment, SegmentFrames>);
static_assert(!std::is_invocable_v<decltype(&CaptionService::CaptionFor), CaptionService&,
                                   const VideoSegment&, const PromptSpec&>);

SegmentFrames Distinct(int n) {
  SegmentFrames s;
  s.segment_id = "s";
  for (int i = 0; i < n; ++i) s.frames.emplace_back(4, 4, static_cast<std::uint8_t>(i));
  return s;
}

class ScriptedClient : public VlmClient {
 public:
  explicit ScriptedClient(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string model() const override { return "scripted"; }
  std::string Query(const Image&, const PromptSpec&) override {
    ++calls;
    if (next_ >= replies_.size()) Fail(ErrorKind::kVlmUnavailable, "script exhausted");
    const auto r = replies_[next_++];
    if (r == "<down>") Fail(ErrorKind::kVlmUnavailable, "connection refused");
    return r;
  }
  int calls = 0;

 private:
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
};

}  // namespace

TEST_SUITE("captioning") {

TEST_CASE("prompts") {
  const auto p1 = PromptSpec::P1();
  const auto p2 = PromptSpec::P2();
  CHECK(p1.text == "Is the person speaking? Answer with yes or no.");
  CHECK(p2.text == "Is the person speaking? Explain why in a few words");
  CHECK(p2.temperature == 0.2);
  CHECK(p2.max_tokens == 50);
}

TEST_CASE("fixed captions") {
  const auto yes = ToFixedCaption(YesNo::kYes);
  const auto no = ToFixedCaption(YesNo::kNo);
  CHECK(yes.text == "the person is engaged in a conversation");
  CHECK(no.text == "no one is talking");
  CHECK(yes.source == CaptionSource::kFixed);
  CHECK(yes.text != no.text);
}

TEST_CASE("yes/no parsing") {
  for (const char* r : {"yes", "Yes", "YES.", "  yes, the mouth is open", "Yes!\n", "yes"}) {
    CHECK(ParseYesNo(r) == YesNo::kYes);
  }
  for (const char* r : {"no", "No.", " NO", "No, the person is silent.", "no\tbecause"}) {
    CHECK(ParseYesNo(r) == YesNo::kNo);
  }
  for (const char* r : {"Maybe.", "", "   ", "yesterday", "nobody speaks", "I think yes",
                        "n o", "y"}) {
    try {
      ParseYesNo(r);
      FAIL("parsed '" << r << "'");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kUnparseableYesNo);
    }
  }
  Rng rng(17);
  const char alphabet[] = "yesnoYESNO .,!?abc\t\n";
  for (int trial = 0; trial < 2000; ++trial) {
    std::string s;
    const auto len = rng.Below(8);
    for (std::uint64_t i = 0; i < len; ++i) s.push_back(alphabet[rng.Below(sizeof(alphabet) - 1)]);
    const std::string lead = ToLower(Trim(s));
    auto starts = [&](std::string_view w) {
      return lead.rfind(w, 0) == 0 && (lead.size() == w.size() || !std::isalnum(static_cast<unsigned char>(lead[w.size()])));
    };
    if (starts("yes")) {
      CHECK(ParseYesNo(s) == YesNo::kYes);
    } else if (starts("no")) {
      CHECK(ParseYesNo(s) == YesNo::kNo);
    } else {
      CHECK_THROWS_AS(ParseYesNo(s), Error);
    }
  }
}

TEST_CASE("central frame") {
  CHECK(CentralFrameIndex(10) == 4);
  const auto s = Distinct(10);
  const auto [frame, index] = SelectCentralFrame(s);
  CHECK(index == 4);
  CHECK(frame->pixels[0] == 4);

  SegmentFrames padded;
  for (int i = 0; i < 10; ++i) padded.frames.emplace_back(4, 4, static_cast<std::uint8_t>(i % 3));
  CHECK(SelectCentralFrame(padded).first->pixels[0] == 1);
}

TEST_CASE("mock VLM reads the mouth region") {
  MockVlmClient mock;
  const Image speaking = RenderFixtureFrame(64, 0, true, 1);
  const Image silent = RenderFixtureFrame(64, 0, false, 1);
  CHECK(GenerateCaption(speaking, PromptSpec::P1(), mock).text == "yes");
  CHECK(GenerateCaption(silent, PromptSpec::P1(), mock).text == "no");
  CHECK(mock.Query(speaking, PromptSpec::P2()) == mock.Query(speaking, PromptSpec::P2()));
  MockVlmClient always(MockVlmClient::Behavior::kAlwaysYes);
  CHECK(StandaloneVlmPredict(StripLabels({"x", "v", "a", Label::kNotSpeaking, false, {}, std::vector<Image>(10, silent)}), always) ==
        Label::kSpeaking);
}

TEST_CASE("retries then gives up") {
  ScriptedClient flaky({"<down>", "<down>", "No."});
  CHECK(GenerateCaption(Image(4, 4), PromptSpec::P1(), flaky, {3, 0}).text == "no");
  CHECK(flaky.calls == 3);

  ScriptedClient down({"<down>", "<down>", "<down>", "yes"});
  try {
    GenerateCaption(Image(4, 4), PromptSpec::P1(), down, {3, 0});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kVlmUnavailable);
  }
  CHECK(down.calls == 3);

  ScriptedClient vague({"Maybe."});
  CHECK_THROWS_AS(GenerateCaption(Image(4, 4), PromptSpec::P1(), vague, {3, 0}), Error);
  CHECK(vague.calls == 1);

  ScriptedClient chatty({"  The person is   not speaking\nbecause the mouth is closed "});
  CHECK(GenerateCaption(Image(4, 4), PromptSpec::P2(), chatty).text ==
        "The person is not speaking because the mouth is closed");
}

TEST_CASE("caption cache") {
  test::TempDir dir("captions");
  const auto path = dir / "captions.jsonl";
  const CaptionCacheKey a{"abc", "P2", "m", 0.2};
  const CaptionCacheKey b{"abc", "P2", "m", 0.0};
  {
    CaptionCache cache(path);
    CHECK_FALSE(cache.Get(a).has_value());
    cache.Put(a, 50, "The person is speaking");
    CHECK(cache.Get(a) == std::optional<std::string>("The person is speaking"));
    CHECK_FALSE(cache.Get(b).has_value());
  }
  {
    std::ofstream(path, std::ios::app) << "{not json\n";
  }
  CaptionCache reloaded(path);
  CHECK(reloaded.Get(a) == std::optional<std::string>("The person is speaking"));
  CHECK(reloaded.size() == 1);
  CHECK(reloaded.corrupt_lines() == 1);
}

TEST_CASE("duplicate central frames are captioned once") {
  test::TempDir dir("captions");
  CaptionCache cache(dir / "c.jsonl");
  MockVlmClient mock;
  CountingVlmClient counted(mock);
  CaptionService service(counted, &cache);
  for (int i = 0; i < 100; ++i) {
    SegmentFrames s;
    s.segment_id = "s" + std::to_string(i);
    const int look = i < 60 ? i : i - 40;
    for (int f = 0; f < 10; ++f) s.frames.push_back(RenderFixtureFrame(32, look % 3, look % 2, look));
    service.CaptionFor(s, PromptSpec::P1());
  }
  CHECK(counted.calls() <= 60);
  CHECK(service.cache_hits() >= 40);
}

TEST_CASE("fixture client replays recorded answers") {
  test::TempDir dir("fixture");
  const Image a = RenderFixtureFrame(32, 0, true, 1), b = RenderFixtureFrame(32, 1, false, 2);
  {
    std::ofstream out(dir / "vlm.jsonl");
    out << nlohmann::json{{"image_sha256", ImageDigest(a)}, {"prompt_id", "P1"}, {"text", "No."}}.dump() << "\n";
    out << nlohmann::json{{"image_sha256", ImageDigest(b)}, {"prompt_id", "P1"}, {"text", "Yes"}}.dump() << "\n";
  }
  FixtureVlmClient fixture(dir / "vlm.jsonl");
  CHECK(StandaloneVlmPredict({"a", std::vector<Image>(10, a)}, fixture) == Label::kNotSpeaking);
  CHECK(StandaloneVlmPredict({"b", std::vector<Image>(10, b)}, fixture) == Label::kSpeaking);
  CHECK_THROWS_AS(StandaloneVlmPredict({"c", std::vector<Image>(10, Image(4, 4))}, fixture, {1, 0}), Error);
}

TEST_CASE("caption similarity") {
  const MockBackend mock;
  CHECK(ComputeCaptionSimilarity({"no one is talking", "no one is talking"}, mock).mean_pairwise_cosine ==
        doctest::Approx(1.0));
  struct Basis : MockBackend {
    EmbeddingVector EncodeText(std::string_view text) const override {
      EmbeddingVector v = EmbeddingVector::Zero(512);
      v[text == "one" ? 1 : 2] = 1;
      return v;
    }
  } basis;
  const auto stats = ComputeCaptionSimilarity({"one", "two"}, basis);
  CHECK(stats.mean_pairwise_cosine == doctest::Approx(0.0));
  CHECK(stats.pairs == 1);
  try {
    ComputeCaptionSimilarity({"alone"}, mock);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kTooFewCaptions);
  }
}

}  // TEST_SUITE

}  // namespace vad
