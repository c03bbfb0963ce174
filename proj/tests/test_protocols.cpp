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

#include "doctest.h"
#include "vad/error.hpp"
#include "vad/protocols.hpp"
#include "vad/synthetic.hpp"

namespace vad {
namespace {

FeatureSet Blobs(int persons, const std::string& prefix = "p", std::uint64_t seed = 1) {
  SyntheticSpec spec;
  spec.persons = persons;
  spec.per_class = 24;
  spec.person_prefix = prefix;
  spec.seed = seed;
  return MakeSyntheticFeatures(spec);
}

ProtocolOptions Options() {
  ProtocolOptions o;
  o.config.batch_size = 16;
  o.config.max_epochs = 15;
  o.config.seed = 2;
  o.dataset = "synthetic";
  return o;
}

}  // namespace

TEST_SUITE("protocols") {

TEST_CASE("constant model scores the closed-form F1") {
  SyntheticSpec spec;
  spec.persons = 3;
  spec.per_class = 10;
  auto features = MakeSyntheticFeatures(spec);
  // Skew the priors: drop some speaking segments of p2 and p3.
  std::erase_if(features, [n = 0](const SampleFeatures& s) mutable {
    return s.label == Label::kSpeaking && s.person_id != "p1" && (n++ % 3 == 0);
  });
  auto o = Options();
  o.runner = [](const FoldSpec& fold, const FeatureSet& fs) {
    std::vector<PredictionRecord> out;
    for (const auto& s : fs) {
      if (s.person_id == fold.held_out_person) out.push_back(MakePrediction(s.segment_id, s.person_id, s.label, 1.0));
    }
    return out;
  };
  const auto result = RunLopo(features, o);
  REQUIRE(result.report.per_person.size() == 3);
  for (const auto& score : result.report.per_person) {
    double pos = 0, neg = 0;
    for (const auto& s : features) {
      if (s.person_id != score.person_id) continue;
      (s.label == Label::kSpeaking ? pos : neg) += 1;
    }
    CHECK(score.f1 == doctest::Approx(2 * pos / (2 * pos + neg)).epsilon(1e-12));
  }
  CHECK(result.predictions.size() == features.size());
}

TEST_CASE("two-person separable lopo") {
  const auto result = RunLopo(Blobs(2), Options());
  REQUIRE(result.report.per_person.size() == 2);
  for (const auto& s : result.report.per_person) CHECK(s.f1 >= 0.95);
  CHECK(result.report.protocol == Protocol::kLopo);
  CHECK(result.report.config["learning_rate"] == 0.001);
}

TEST_CASE("person order follows the declared order") {
  auto o = Options();
  o.person_order = {"p3", "p1", "p2"};
  o.runner = [](const FoldSpec& fold, const FeatureSet& fs) {
    std::vector<PredictionRecord> out;
    for (const auto& s : fs) {
      if (s.person_id == fold.held_out_person) out.push_back(MakePrediction(s.segment_id, s.person_id, s.label, s.label == Label::kSpeaking ? 1 : -1));
    }
    return out;
  };
  const auto r = RunLopo(Blobs(3), o);
  CHECK(r.report.per_person[0].person_id == "p3");
  CHECK(r.report.per_person[2].person_id == "p2");
}

TEST_CASE("a failing fold aborts unless partial reports are allowed") {
  auto o = Options();
  o.runner = [](const FoldSpec& fold, const FeatureSet& fs) {
    if (fold.held_out_person == "p2") Fail(ErrorKind::kDivergedLoss, "loss diverged");
    std::vector<PredictionRecord> out;
    for (const auto& s : fs) {
      if (s.person_id == fold.held_out_person) out.push_back(MakePrediction(s.segment_id, s.person_id, s.label, 1));
    }
    return out;
  };
  const auto features = Blobs(3);
  CHECK_THROWS_AS(RunLopo(features, o), Error);
  o.allow_partial = true;
  const auto r = RunLopo(features, o);
  CHECK(r.report.per_person.size() == 2);
  REQUIRE(r.failed.size() == 1);
  CHECK(r.failed[0].rfind("p2:", 0) == 0);
}

TEST_CASE("a runner that leaks other persons is rejected") {
  auto o = Options();
  o.runner = [](const FoldSpec&, const FeatureSet& fs) {
    std::vector<PredictionRecord> out;
    for (const auto& s : fs) out.push_back(MakePrediction(s.segment_id, s.person_id, s.label, 1));
    return out;
  };
  CHECK_THROWS_AS(RunLopo(Blobs(2), o), Error);
}

TEST_CASE("cross-dataset") {
  const auto train = Blobs(3, "col", 1);
  SyntheticSpec shifted;
  shifted.persons = 3;
  shifted.per_class = 24;
  shifted.person_prefix = "rv";
  shifted.person_shift = 0.8;
  shifted.seed = 9;
  const auto test = MakeSyntheticFeatures(shifted);
  const auto r = RunCrossDataset(train, test, Options(), {"columbia", "realvad", false});
  REQUIRE(r.report.per_person.size() == 3);
  CHECK(r.report.per_person[0].person_id == "rv1");
  CHECK(r.report.protocol == Protocol::kCrossDataset);
  for (const auto& p : r.predictions) CHECK(p.person_id.rfind("rv", 0) == 0);

  for (const auto& [a, b, names] :
       {std::tuple{train, train, CrossDatasetOptions{"columbia", "realvad", false}},
        std::tuple{train, test, CrossDatasetOptions{"columbia", "columbia", false}}}) {
    try {
      RunCrossDataset(a, b, Options(), names);
      FAIL("collision accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kPersonNamespaceCollision);
    }
  }
  auto quick = Options();
  quick.config.max_epochs = 1;
  CHECK_NOTHROW(RunCrossDataset(train, train, quick, {"columbia", "columbia", true}));
}

}  // TEST_SUITE

}  // namespace vad
