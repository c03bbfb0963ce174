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

#ifndef VADCLIP_VAD_DATASET_HPP_
#define VADCLIP_VAD_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vad/image.hpp"

namespace vad {

enum class Label : std::uint8_t { kNotSpeaking = 0, kSpeaking = 1 };

std::string_view LabelName(Label label);
Label ParseLabel(std::string_view text);  // throws kInvalidArgument

inline constexpr int kSegmentLength = 10;

struct BBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  friend bool operator==(const BBox&, const BBox&) = default;
};

struct AnnotationRecord {
  std::string video_id;
  std::int64_t frame_index = 0;
  std::string person_id;
  BBox bbox;
  Label label = Label::kNotSpeaking;
  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

struct AnnotationTable {
  // Sorted by (person_id, frame_index, video_id).
  std::vector<AnnotationRecord> records;
  // Persons in order of first appearance in the source file.
  std::vector<std::string> person_order;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

// Header `video_id,frame_index,person_id,x,y,w,h,label`.
AnnotationTable LoadAnnotations(const std::filesystem::path& path);
AnnotationTable ParseAnnotations(std::string_view csv);
// Sorts and validates uniqueness. Used on tables assembled in memory.
AnnotationTable NormalizeTable(std::vector<AnnotationRecord> records);
std::string FormatAnnotations(const AnnotationTable& table);

// A segment before any pixels are loaded.
struct SegmentPlan {
  std::string segment_id;
  std::string video_id;
  std::string person_id;
  Label label = Label::kNotSpeaking;
  bool padded = false;
  std::vector<std::int64_t> frame_indices;
  friend bool operator==(const SegmentPlan&, const SegmentPlan&) = default;
};

struct VideoSegment {
  std::string segment_id;
  std::string video_id;
  std::string person_id;
  Label label = Label::kNotSpeaking;
  bool padded = false;
  std::vector<std::int64_t> frame_indices;
  std::vector<Image> frames;
};

// Consecutive same-label frames of one (video, person) stream form a run; a
// gap in frame indices also ends a run. Each run is cut into length-T
// chunks and a short tail is padded cyclically: frame i = tail[i mod r].
std::vector<SegmentPlan> PlanSegments(const AnnotationTable& table,
                                      int segment_length = kSegmentLength);

std::filesystem::path FramePath(const std::filesystem::path& frames_root,
                                std::string_view video_id, std::string_view person_id,
                                std::int64_t frame_index);

VideoSegment LoadSegment(const SegmentPlan& plan, const std::filesystem::path& frames_root);

std::vector<VideoSegment> BuildSegments(const AnnotationTable& table,
                                        const std::filesystem::path& frames_root,
                                        int segment_length = kSegmentLength);

struct FoldSpec {
  std::string held_out_person;
  std::set<std::string> train_persons;
};

// One fold per person, in `person_order` (or first-appearance order when
// empty). Throws kSinglePersonDataset for fewer than two persons.
std::vector<FoldSpec> MakeLopoFolds(const std::vector<std::string>& persons);

template <typename Segment>
std::vector<FoldSpec> MakeLopoFolds(const std::vector<Segment>& segments,
                                    const std::vector<std::string>& person_order = {}) {
  std::vector<std::string> persons = person_order;
  if (persons.empty()) {
    std::set<std::string> seen;
    for (const auto& s : segments) {
      if (seen.insert(s.person_id).second) persons.push_back(s.person_id);
    }
  }
  return MakeLopoFolds(persons);
}

// Returns `size` indices into `labels`, size/2 per class, without
// replacement, deterministic in `seed`.
std::vector<std::size_t> SampleBalancedIndices(std::span<const Label> labels, std::size_t size,
                                               std::uint64_t seed);

struct Batch {
  std::vector<VideoSegment> segments;
  std::size_t speaking = 0;
  std::size_t not_speaking = 0;
};

Batch SampleBalancedBatch(const std::vector<VideoSegment>& segments, std::size_t size,
                          std::uint64_t seed);

struct AugmentConfig {
  double flip_probability = 0.5;
  double crop_jitter = 0.05;  // fraction removable from each side
  double brightness = 0.10;   // factor drawn from [1 - b, 1 + b]

  static AugmentConfig Identity() { return {0.0, 0.0, 0.0}; }
};

// Parameters drawn once per segment and applied to every frame.
struct AugmentParams {
  bool flip = false;
  double crop_left = 0, crop_top = 0, crop_right = 0, crop_bottom = 0;
  double brightness = 1.0;
};

AugmentParams DrawAugmentParams(const AugmentConfig& config, std::uint64_t seed);
Image ApplyAugment(const Image& frame, const AugmentParams& params);
VideoSegment Augment(const VideoSegment& segment, std::uint64_t seed,
                     const AugmentConfig& config = {});

// JSON-lines: {segment_id, person_id, label, frame_indices, padded}.
std::string FormatManifest(std::span<const SegmentPlan> plans);
void WriteManifest(std::span<const SegmentPlan> plans, const std::filesystem::path& path);

}  // namespace vad

#endif  // VADCLIP_VAD_DATASET_HPP_
