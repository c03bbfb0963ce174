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

#include "vad/metrics.hpp"

#include <cmath>
#include <sstream>

#include "vad/error.hpp"
#include "vad/util.hpp"

namespace vad {

PredictionRecord MakePrediction(std::string segment_id, std::string person_id, Label truth,
                                double logit, double threshold) {
  return {std::move(segment_id), std::move(person_id), truth,
          logit > threshold ? Label::kSpeaking : Label::kNotSpeaking, logit};
}

double Confusion::precision() const {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double Confusion::recall() const {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double Confusion::f1() const {
  // 2PR/(P+R) == 2TP/(2TP+FP+FN), which avoids the intermediate rounding.
  const long denom = 2 * tp + fp + fn;
  return tp == 0 || denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

Confusion Tally(std::span<const PredictionRecord> preds, Label positive) {
  Confusion c;
  for (const auto& p : preds) {
    const bool truth = p.true_label == positive;
    const bool guess = p.predicted_label == positive;
    if (truth && guess) ++c.tp;
    else if (!truth && guess) ++c.fp;
    else if (truth) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double F1Score(std::span<const PredictionRecord> preds, Label positive) {
  if (preds.empty()) Fail(ErrorKind::kEmptyPredictions, "F1 of an empty prediction set");
  return Tally(preds, positive).f1();
}

std::string_view StdKindName(StdKind kind) {
  return kind == StdKind::kSample ? "sample" : "population";
}

StdKind ParseStdKind(std::string_view text) {
  if (text == "population") return StdKind::kPopulation;
  if (text == "sample") return StdKind::kSample;
  Fail(ErrorKind::kConfigError, "unknown std kind '" + std::string(text) + "'");
}

double Mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double StdDev(std::span<const double> values, StdKind kind) {
  const std::size_t n = values.size();
  if (n == 0 || (kind == StdKind::kSample && n < 2)) return 0.0;
  const double mean = Mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double denom = kind == StdKind::kSample ? static_cast<double>(n - 1) : static_cast<double>(n);
  return std::sqrt(ss / denom);
}

std::string_view ProtocolName(Protocol protocol) {
  switch (protocol) {
    case Protocol::kLopo: return "lopo";
    case Protocol::kCrossDataset: return "cross_dataset";
    case Protocol::kVlmBaseline: return "vlm_baseline";
  }
  return "lopo";
}

Protocol ParseProtocol(std::string_view text) {
  if (text == "lopo") return Protocol::kLopo;
  if (text == "cross_dataset") return Protocol::kCrossDataset;
  if (text == "vlm_baseline") return Protocol::kVlmBaseline;
  Fail(ErrorKind::kMalformedRow, "unknown protocol '" + std::string(text) + "'");
}

void EvalReport::Aggregate() {
  std::vector<double> scores;
  for (const auto& p : per_person) scores.push_back(p.f1);
  average = Mean(scores);
  std = StdDev(scores, std_kind);
}

nlohmann::ordered_json EvalReport::ToJson() const {
  nlohmann::ordered_json j;
  j["protocol"] = ProtocolName(protocol);
  j["dataset"] = dataset;
  j["per_person_f1"] = nlohmann::ordered_json::array();
  for (const auto& p : per_person) {
    j["per_person_f1"].push_back({{"person_id", p.person_id}, {"f1", p.f1}});
  }
  j["average"] = average;
  j["std"] = std;
  j["std_kind"] = StdKindName(std_kind);
  j["config"] = config;
  return j;
}

EvalReport EvalReport::FromJson(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.protocol = ParseProtocol(j.at("protocol").get<std::string>());
    r.dataset = j.at("dataset").get<std::string>();
    for (const auto& p : j.at("per_person_f1")) {
      r.per_person.push_back({p.at("person_id").get<std::string>(), p.at("f1").get<double>()});
    }
    r.average = j.at("average").get<double>();
    r.std = j.at("std").get<double>();
    r.std_kind = ParseStdKind(j.value("std_kind", std::string("population")));
    if (j.contains("config")) r.config = j.at("config");
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kMalformedRow, std::string("malformed report: ") + e.what());
  }
  return r;
}

ReportFormat ParseReportFormat(std::string_view text) {
  if (text == "markdown" || text == "md") return ReportFormat::kMarkdown;
  if (text == "csv") return ReportFormat::kCsv;
  Fail(ErrorKind::kConfigError, "unknown report format '" + std::string(text) + "'");
}

std::string RenderReport(const EvalReport& report, ReportFormat format) {
  std::vector<std::string> head, cells;
  for (const auto& p : report.per_person) {
    head.push_back(p.person_id);
    cells.push_back(FormatFixed(100.0 * p.f1, 2));
  }
  head.push_back("AVG");
  cells.push_back(FormatFixed(100.0 * report.average, 2));
  head.push_back("STD");
  cells.push_back(FormatFixed(100.0 * report.std, 2));

  std::ostringstream out;
  auto join = [&](const std::vector<std::string>& v, const char* sep) {
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? sep : "") << v[i];
  };
  if (format == ReportFormat::kCsv) {
    join(head, ",");
    out << "\n";
    join(cells, ",");
    out << "\n";
    return out.str();
  }
  out << "| ";
  join(head, " | ");
  out << " |\n|";
  for (std::size_t i = 0; i < head.size(); ++i) out << "---|";
  out << "\n| ";
  join(cells, " | ");
  out << " |\n";
  return out.str();
}

std::vector<std::pair<std::string, double>> ParseReportCsv(std::string_view csv) {
  const auto lines = Split(csv, '\n');
  if (lines.size() < 2) Fail(ErrorKind::kMalformedRow, "report csv needs two lines");
  const auto head = Split(lines[0], ',');
  const auto cells = Split(lines[1], ',');
  if (head.size() != cells.size()) Fail(ErrorKind::kMalformedRow, "report csv column mismatch");
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < head.size(); ++i) {
    try {
      out.emplace_back(head[i], std::stod(cells[i]));
    } catch (const std::exception&) {
      Fail(ErrorKind::kMalformedRow, "report csv cell '" + cells[i] + "' is not a number");
    }
  }
  return out;
}

std::string FormatPredictions(std::span<const PredictionRecord> preds) {
  std::string out;
  for (const auto& p : preds) {
    nlohmann::ordered_json j;
    j["segment_id"] = p.segment_id;
    j["person_id"] = p.person_id;
    j["true"] = LabelName(p.true_label);
    j["pred"] = LabelName(p.predicted_label);
    j["logit"] = p.logit;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void WritePredictions(std::span<const PredictionRecord> preds, const std::filesystem::path& path) {
  WriteFileAtomic(path, FormatPredictions(preds));
}

}  // namespace vad
