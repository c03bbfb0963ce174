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

#include "vad/protocols.hpp"

#include <set>

#include <spdlog/spdlog.h>

#include "vad/error.hpp"

namespace vad {

namespace {

std::vector<PredictionRecord> TrainAndPredict(const FoldSpec& fold, const FeatureSet& features,
                                              const ProtocolOptions& options) {
  const Checkpoint checkpoint = TrainFold(fold, options.config, features, options.hooks);
  if (options.on_checkpoint) options.on_checkpoint(fold, checkpoint);
  auto head = RestoreHead(checkpoint);
  return PredictPerson(*head, options.config, features, fold.held_out_person);
}

}  // namespace

std::vector<std::string> PersonsOf(const FeatureSet& features) {
  std::vector<std::string> persons;
  std::set<std::string> seen;
  for (const auto& s : features) {
    if (seen.insert(s.person_id).second) persons.push_back(s.person_id);
  }
  return persons;
}

ProtocolResult RunLopo(const FeatureSet& features, const ProtocolOptions& options) {
  const auto persons = options.person_order.empty() ? PersonsOf(features) : options.person_order;
  return RunLopo([&](const FoldSpec&) -> const FeatureSet& { return features; }, persons, options);
}

ProtocolResult RunLopo(const FeatureProvider& provider, const std::vector<std::string>& persons,
                       const ProtocolOptions& options) {
  ProtocolResult result;
  result.report.protocol = Protocol::kLopo;
  result.report.dataset = options.dataset;
  result.report.std_kind = options.std_kind;
  result.report.config = options.config.ToJson();
  for (const auto& fold : MakeLopoFolds(persons)) {
    try {
      const FeatureSet& features = provider(fold);
      auto preds = options.runner ? options.runner(fold, features)
                                  : TrainAndPredict(fold, features, options);
      for (const auto& p : preds) {
        if (p.person_id != fold.held_out_person) {
          Fail(ErrorKind::kInternal, "fold runner predicted segment " + p.segment_id +
                                         " of another person");
        }
      }
      if (preds.empty()) {
        Fail(ErrorKind::kEmptyPredictions, "person '" + fold.held_out_person + "' has no segments");
      }
      result.report.per_person.push_back({fold.held_out_person, F1Score(preds)});
      spdlog::info("fold {}: F1 {:.4f} on {} segments", fold.held_out_person,
                   result.report.per_person.back().f1, preds.size());
      result.predictions.insert(result.predictions.end(), preds.begin(), preds.end());
    } catch (const Error& e) {
      if (!options.allow_partial) throw;
      spdlog::warn("fold {} failed: {}", fold.held_out_person, e.what());
      result.failed.push_back(fold.held_out_person + ": " + e.what());
    }
  }
  result.report.Aggregate();
  if (!result.failed.empty()) result.report.config["failed_folds"] = result.failed;
  return result;
}

ProtocolResult RunCrossDataset(const FeatureSet& train, const FeatureSet& test,
                               const ProtocolOptions& options, const CrossDatasetOptions& cross) {
  const auto train_persons = PersonsOf(train);
  const auto test_persons = options.person_order.empty() ? PersonsOf(test) : options.person_order;
  if (!cross.allow_same) {
    if (cross.train_dataset == cross.test_dataset) {
      Fail(ErrorKind::kPersonNamespaceCollision,
           "train and test dataset are both '" + cross.train_dataset + "' (pass --allow-same)");
    }
    const std::set<std::string> train_set(train_persons.begin(), train_persons.end());
    for (const auto& p : test_persons) {
      if (train_set.count(p)) {
        Fail(ErrorKind::kPersonNamespaceCollision,
             "person '" + p + "' appears in both datasets (pass --allow-same)");
      }
    }
  }
  FoldSpec fold;
  fold.train_persons.insert(train_persons.begin(), train_persons.end());
  const Checkpoint checkpoint = TrainFold(fold, options.config, train, options.hooks);
  if (options.on_checkpoint) options.on_checkpoint(fold, checkpoint);
  auto head = RestoreHead(checkpoint);

  ProtocolResult result;
  result.report.protocol = Protocol::kCrossDataset;
  result.report.dataset = cross.test_dataset;
  result.report.std_kind = options.std_kind;
  result.report.config = options.config.ToJson();
  result.report.config["train_dataset"] = cross.train_dataset;
  for (const auto& person : test_persons) {
    auto preds = PredictPerson(*head, options.config, test, person);
    if (preds.empty()) {
      Fail(ErrorKind::kEmptyPredictions, "test person '" + person + "' has no segments");
    }
    result.report.per_person.push_back({person, F1Score(preds)});
    result.predictions.insert(result.predictions.end(), preds.begin(), preds.end());
  }
  result.report.Aggregate();
  return result;
}

}  // namespace vad
