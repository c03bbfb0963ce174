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

#ifndef VADCLIP_VAD_PROTOCOLS_HPP_
#define VADCLIP_VAD_PROTOCOLS_HPP_

#include <functional>
#include <string>
#include <vector>

#include "vad/metrics.hpp"
#include "vad/training.hpp"

namespace vad {

// Trains on the fold and returns predictions for every held-out segment.
using FoldRunner = std::function<std::vector<PredictionRecord>(const FoldSpec&, const FeatureSet&)>;
// Features to use for one fold (fine-tuned backbones differ per fold).
using FeatureProvider = std::function<const FeatureSet&(const FoldSpec&)>;

struct ProtocolOptions {
  TrainConfig config;
  std::string dataset = "dataset";
  StdKind std_kind = StdKind::kPopulation;
  // Person column order; first appearance in the features when empty.
  std::vector<std::string> person_order;
  bool allow_partial = false;
  TrainHooks hooks;
  // Called with every trained checkpoint.
  std::function<void(const FoldSpec&, const Checkpoint&)> on_checkpoint;
  // Replaces train-then-predict; used for baselines and tests.
  FoldRunner runner;
};

struct ProtocolResult {
  EvalReport report;
  std::vector<PredictionRecord> predictions;
  std::vector<std::string> failed;  // "<person>: <error>"
};

std::vector<std::string> PersonsOf(const FeatureSet& features);

ProtocolResult RunLopo(const FeatureSet& features, const ProtocolOptions& options);
ProtocolResult RunLopo(const FeatureProvider& provider, const std::vector<std::string>& persons,
                       const ProtocolOptions& options);

struct CrossDatasetOptions {
  std::string train_dataset = "train";
  std::string test_dataset = "test";
  bool allow_same = false;
};

// Trains one model on every train person and scores each test person.
// Throws kPersonNamespaceCollision when the datasets share a name or a
// person id, unless allow_same.
ProtocolResult RunCrossDataset(const FeatureSet& train, const FeatureSet& test,
                               const ProtocolOptions& options, const CrossDatasetOptions& cross);

}  // namespace vad

#endif  // VADCLIP_VAD_PROTOCOLS_HPP_
