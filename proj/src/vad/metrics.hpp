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

#ifndef VADCLIP_VAD_METRICS_HPP_
#define VADCLIP_VAD_METRICS_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vad/dataset.hpp"

namespace vad {

struct PredictionRecord {
  std::string segment_id;
  std::string person_id;
  Label true_label = Label::kNotSpeaking;
  Label predicted_label = Label::kNotSpeaking;
  double logit = 0.0;
};

PredictionRecord MakePrediction(std::string segment_id, std::string person_id, Label truth,
                                double logit, double threshold = 0.0);

struct Confusion {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  double precision() const;
  double recall() const;
  double f1() const;
};

Confusion Tally(std::span<const PredictionRecord> preds, Label positive = Label::kSpeaking);
// F1 of `positive`; 0 when precision + recall is 0. Throws kEmptyPredictions.
double F1Score(std::span<const PredictionRecord> preds, Label positive = Label::kSpeaking);

enum class StdKind { kPopulation, kSample };
std::string_view StdKindName(StdKind kind);
StdKind ParseStdKind(std::string_view text);
double Mean(std::span<const double> values);
// Sample std of a single value is 0.
double StdDev(std::span<const double> values, StdKind kind);

enum class Protocol { kLopo, kCrossDataset, kVlmBaseline };
std::string_view ProtocolName(Protocol protocol);
Protocol ParseProtocol(std::string_view text);

struct PersonScore {
  std::string person_id;
  double f1 = 0.0;
};

struct EvalReport {
  Protocol protocol = Protocol::kLopo;
  std::string dataset;
  std::vector<PersonScore> per_person;  // dataset-declared person order
  double average = 0.0;
  double std = 0.0;
  StdKind std_kind = StdKind::kPopulation;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();

  // Recomputes average and std from per_person.
  void Aggregate();
  nlohmann::ordered_json ToJson() const;
  static EvalReport FromJson(const nlohmann::json& j);
};

enum class ReportFormat { kMarkdown, kCsv };
ReportFormat ParseReportFormat(std::string_view text);
// One column per person, then AVG and STD, as percentages with 2 decimals.
std::string RenderReport(const EvalReport& report, ReportFormat format);

// Parses RenderReport(..., kCsv) output back to {column -> percentage}.
std::vector<std::pair<std::string, double>> ParseReportCsv(std::string_view csv);

std::string FormatPredictions(std::span<const PredictionRecord> preds);
void WritePredictions(std::span<const PredictionRecord> preds, const std::filesystem::path& path);

}  // namespace vad

#endif  // VADCLIP_VAD_METRICS_HPP_
