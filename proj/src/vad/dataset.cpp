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

#include "vad/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "vad/error.hpp"
#include "vad/random.hpp"
#include "vad/util.hpp"

namespace vad {

namespace {

constexpr std::string_view kHeader = "video_id,frame_index,person_id,x,y,w,h,label";

template <typename Int>
bool ParseInt(std::string_view text, Int& out) {
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

[[noreturn]] void RowError(std::size_t row, const std::string& what) {
  Fail(ErrorKind::kMalformedRow, "annotation row " + std::to_string(row) + ": " + what);
}

std::string PaddedIndex(std::int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06lld", static_cast<long long>(index));
  return buf;
}

}  // namespace

std::string_view LabelName(Label label) {
  return label == Label::kSpeaking ? "speaking" : "not_speaking";
}

Label ParseLabel(std::string_view text) {
  if (text == "speaking") return Label::kSpeaking;
  if (text == "not_speaking") return Label::kNotSpeaking;
  Fail(ErrorKind::kInvalidArgument, "unknown label '" + std::string(text) + "'");
}

AnnotationTable NormalizeTable(std::vector<AnnotationRecord> records) {
  AnnotationTable table;
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (seen.insert(r.person_id).second) table.person_order.push_back(r.person_id);
  }
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.person_id, a.frame_index, a.video_id) <
           std::tie(b.person_id, b.frame_index, b.video_id);
  });
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& a = records[i - 1];
    const auto& b = records[i];
    if (a.person_id == b.person_id && a.frame_index == b.frame_index &&
        a.video_id == b.video_id) {
      Fail(ErrorKind::kDuplicateKey, "duplicate annotation (" + a.video_id + ", " +
                                         std::to_string(a.frame_index) + ", " + a.person_id +
                                         ")");
    }
  }
  table.records = std::move(records);
  return table;
}

AnnotationTable ParseAnnotations(std::string_view csv) {
  auto lines = Split(csv, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) RowError(1, "missing header");
  auto strip_cr = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };
  strip_cr(lines[0]);
  if (lines[0] != kHeader) RowError(1, "expected header '" + std::string(kHeader) + "'");

  std::vector<AnnotationRecord> records;
  records.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t row = i + 1;
    strip_cr(lines[i]);
    const auto fields = Split(lines[i], ',');
    if (fields.size() != 8) {
      RowError(row, "expected 8 fields, got " + std::to_string(fields.size()));
    }
    AnnotationRecord r;
    r.video_id = fields[0];
    r.person_id = fields[2];
    if (r.video_id.empty() || r.person_id.empty()) RowError(row, "empty id");
    if (!ParseInt(fields[1], r.frame_index) || r.frame_index < 0) {
      RowError(row, "bad frame_index '" + fields[1] + "'");
    }
    int* box[] = {&r.bbox.x, &r.bbox.y, &r.bbox.w, &r.bbox.h};
    for (int k = 0; k < 4; ++k) {
      if (!ParseInt(fields[3 + k], *box[k])) RowError(row, "bad bbox field '" + fields[3 + k] + "'");
    }
    if (r.bbox.w <= 0 || r.bbox.h <= 0) RowError(row, "bbox w and h must be positive");
    if (fields[7] == "speaking") {
      r.label = Label::kSpeaking;
    } else if (fields[7] == "not_speaking") {
      r.label = Label::kNotSpeaking;
    } else {
      RowError(row, "bad label '" + fields[7] + "'");
    }
    records.push_back(std::move(r));
  }
  return NormalizeTable(std::move(records));
}

AnnotationTable LoadAnnotations(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    Fail(ErrorKind::kMissingFile, "annotation file not found: " + path.string());
  }
  return ParseAnnotations(ReadFile(path));
}

std::string FormatAnnotations(const AnnotationTable& table) {
  std::ostringstream out;
  out << kHeader << '\n';
  for (const auto& r : table.records) {
    out << r.video_id << ',' << r.frame_index << ',' << r.person_id << ',' << r.bbox.x << ','
        << r.bbox.y << ',' << r.bbox.w << ',' << r.bbox.h << ',' << LabelName(r.label) << '\n';
  }
  return out.str();
}

std::vector<SegmentPlan> PlanSegments(const AnnotationTable& table, int segment_length) {
  if (segment_length < 1) Fail(ErrorKind::kInvalidArgument, "segment length must be >= 1");
  const auto T = static_cast<std::size_t>(segment_length);

  // (person, video) -> records in frame order. The table is already sorted by
  // frame within a person, so insertion order is frame order.
  std::map<std::pair<std::string, std::string>, std::vector<const AnnotationRecord*>> streams;
  for (const auto& r : table.records) streams[{r.person_id, r.video_id}].push_back(&r);

  std::vector<SegmentPlan> plans;
  auto emit = [&](const std::vector<const AnnotationRecord*>& run) {
    std::size_t start = 0;
    while (start < run.size()) {
      const std::size_t r = std::min(T, run.size() - start);
      SegmentPlan plan;
      plan.video_id = run[start]->video_id;
      plan.person_id = run[start]->person_id;
      plan.label = run[start]->label;
      plan.padded = r < T;
      plan.segment_id = plan.video_id + "/" + plan.person_id + "/" + PaddedIndex(run[start]->frame_index);
      for (std::size_t i = 0; i < T; ++i) {
        plan.frame_indices.push_back(run[start + i % r]->frame_index);
      }
      plans.push_back(std::move(plan));
      start += r;
    }
  };

  for (const auto& [key, records] : streams) {
    std::vector<const AnnotationRecord*> run;
    for (const auto* rec : records) {
      if (!run.empty() && (rec->label != run.back()->label ||
                           rec->frame_index != run.back()->frame_index + 1)) {
        emit(run);
        run.clear();
      }
      run.push_back(rec);
    }
    if (!run.empty()) emit(run);
  }
  return plans;
}

std::filesystem::path FramePath(const std::filesystem::path& frames_root,
                                std::string_view video_id, std::string_view person_id,
                                std::int64_t frame_index) {
  return frames_root / std::string(video_id) / std::string(person_id) /
         (PaddedIndex(frame_index) + ".png");
}

VideoSegment LoadSegment(const SegmentPlan& plan, const std::filesystem::path& frames_root) {
  VideoSegment seg;
  seg.segment_id = plan.segment_id;
  seg.video_id = plan.video_id;
  seg.person_id = plan.person_id;
  seg.label = plan.label;
  seg.padded = plan.padded;
  seg.frame_indices = plan.frame_indices;
  std::map<std::int64_t, std::size_t> loaded;  // padded segments repeat frames
  for (auto index : plan.frame_indices) {
    if (auto it = loaded.find(index); it != loaded.end()) {
      seg.frames.push_back(seg.frames[it->second]);
      continue;
    }
    const auto path = FramePath(frames_root, plan.video_id, plan.person_id, index);
    if (!std::filesystem::exists(path)) {
      Fail(ErrorKind::kMissingFrameImage, "missing frame image " + path.string());
    }
    loaded[index] = seg.frames.size();
    seg.frames.push_back(LoadPng(path));
  }
  return seg;
}

std::vector<VideoSegment> BuildSegments(const AnnotationTable& table,
                                        const std::filesystem::path& frames_root,
                                        int segment_length) {
  std::vector<VideoSegment> out;
  for (const auto& plan : PlanSegments(table, segment_length)) {
    out.push_back(LoadSegment(plan, frames_root));
  }
  return out;
}

std::vector<FoldSpec> MakeLopoFolds(const std::vector<std::string>& persons) {
  const std::set<std::string> all(persons.begin(), persons.end());
  if (all.size() < 2) {
    Fail(ErrorKind::kSinglePersonDataset,
         "leave-one-person-out needs at least 2 persons, got " + std::to_string(all.size()));
  }
  std::vector<FoldSpec> folds;
  std::set<std::string> done;
  for (const auto& p : persons) {
    if (!done.insert(p).second) continue;
    FoldSpec fold;
    fold.held_out_person = p;
    fold.train_persons = all;
    fold.train_persons.erase(p);
    folds.push_back(std::move(fold));
  }
  return folds;
}

std::vector<std::size_t> SampleBalancedIndices(std::span<const Label> labels, std::size_t size,
                                               std::uint64_t seed) {
  if (size % 2 != 0) Fail(ErrorKind::kInvalidArgument, "batch size must be even");
  std::vector<std::size_t> speaking, silent;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == Label::kSpeaking ? speaking : silent).push_back(i);
  }
  const std::size_t half = size / 2;
  if (speaking.size() < half) {
    Fail(ErrorKind::kInsufficientClassSamples,
         "class speaking has " + std::to_string(speaking.size()) + " segments, need " +
             std::to_string(half));
  }
  if (silent.size() < half) {
    Fail(ErrorKind::kInsufficientClassSamples,
         "class not_speaking has " + std::to_string(silent.size()) + " segments, need " +
             std::to_string(half));
  }
  Rng rng(seed);
  // Partial Fisher-Yates: the first `half` slots become the sample.
  auto draw = [&](std::vector<std::size_t>& pool, std::vector<std::size_t>& out) {
    for (std::size_t i = 0; i < half; ++i) {
      std::swap(pool[i], pool[i + rng.Below(pool.size() - i)]);
      out.push_back(pool[i]);
    }
  };
  std::vector<std::size_t> picked;
  picked.reserve(size);
  draw(speaking, picked);
  draw(silent, picked);
  rng.Shuffle(picked);
  return picked;
}

Batch SampleBalancedBatch(const std::vector<VideoSegment>& segments, std::size_t size,
                          std::uint64_t seed) {
  std::vector<Label> labels;
  labels.reserve(segments.size());
  for (const auto& s : segments) labels.push_back(s.label);
  Batch batch;
  for (auto i : SampleBalancedIndices(labels, size, seed)) {
    batch.segments.push_back(segments[i]);
    (segments[i].label == Label::kSpeaking ? batch.speaking : batch.not_speaking)++;
  }
  return batch;
}

AugmentParams DrawAugmentParams(const AugmentConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  AugmentParams p;
  // Draw every field unconditionally so each one has a fixed stream position.
  const double flip_draw = rng.Uniform();
  const double crop[4] = {rng.Uniform(), rng.Uniform(), rng.Uniform(), rng.Uniform()};
  const double bright = rng.Uniform(-1.0, 1.0);
  p.flip = flip_draw < config.flip_probability;
  p.crop_left = crop[0] * config.crop_jitter;
  p.crop_top = crop[1] * config.crop_jitter;
  p.crop_right = crop[2] * config.crop_jitter;
  p.crop_bottom = crop[3] * config.crop_jitter;
  p.brightness = 1.0 + bright * config.brightness;
  return p;
}

Image ApplyAugment(const Image& frame, const AugmentParams& p) {
  Image out = frame;
  const int left = static_cast<int>(p.crop_left * frame.width);
  const int right = static_cast<int>(p.crop_right * frame.width);
  const int top = static_cast<int>(p.crop_top * frame.height);
  const int bottom = static_cast<int>(p.crop_bottom * frame.height);
  if (left + right + top + bottom > 0) {
    out = Crop(out, left, top, frame.width - left - right, frame.height - top - bottom);
    out = Resize(out, frame.width, frame.height);
  }
  if (p.flip) out = FlipHorizontal(out);
  if (p.brightness != 1.0) out = ScaleBrightness(out, p.brightness);
  return out;
}

VideoSegment Augment(const VideoSegment& segment, std::uint64_t seed,
                     const AugmentConfig& config) {
  const AugmentParams params = DrawAugmentParams(config, seed);
  VideoSegment out = segment;
  for (auto& frame : out.frames) frame = ApplyAugment(frame, params);
  return out;
}

std::string FormatManifest(std::span<const SegmentPlan> plans) {
  std::string out;
  for (const auto& p : plans) {
    nlohmann::ordered_json j;
    j["segment_id"] = p.segment_id;
    j["person_id"] = p.person_id;
    j["label"] = LabelName(p.label);
    j["frame_indices"] = p.frame_indices;
    j["padded"] = p.padded;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void WriteManifest(std::span<const SegmentPlan> plans, const std::filesystem::path& path) {
  WriteFileAtomic(path, FormatManifest(plans));
}

}  // namespace vad
