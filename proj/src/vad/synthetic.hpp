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

#ifndef VADCLIP_VAD_SYNTHETIC_HPP_
#define VADCLIP_VAD_SYNTHETIC_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "vad/image.hpp"
#include "vad/training.hpp"

namespace vad {

// Gaussian blobs in embedding space. Class centres sit at
// +-separation/2 along a direction fixed by world_seed; each person adds a
// random offset of norm person_shift, and every token gets isotropic noise
// of total norm ~token_noise. Text comes from the fixed (or, for kVariable,
// templated) caption of an answer that is right with answer_accuracy.
struct SyntheticSpec {
  int persons = 3;
  int per_class = 40;  // segments per class per person
  std::string person_prefix = "p";
  double separation = 2.0;
  double person_shift = 0.5;
  double token_noise = 1.0;
  double answer_accuracy = 0.9;
  CaptionMode caption_mode = CaptionMode::kFixed;
  std::uint64_t world_seed = 1;
  std::uint64_t seed = 1;
};

FeatureSet MakeSyntheticFeatures(const SyntheticSpec& spec);

// Upper-body-like crops: a person-tinted background, head and torso, and a
// mouth region that is striped (speaking) or flat (silent). The mock VLM
// and both local encoders can tell the classes apart.
Image RenderFixtureFrame(int size, int person, bool speaking, std::uint64_t seed);

struct ImageFixtureSpec {
  std::filesystem::path root;
  int persons = 3;
  int videos = 1;
  int segments_per_class = 20;  // per person, approximately
  int frame_size = 64;
  std::uint64_t seed = 7;
};

struct ImageFixture {
  std::filesystem::path annotations;
  std::filesystem::path frames_root;
  std::filesystem::path config;
  std::vector<std::string> persons;
  std::size_t frames = 0;
};

// Writes annotations.csv, frames/ and config.toml under spec.root. Runs
// alternate labels with lengths between 5 and 30 frames, so some segments
// need padding. The config keeps caches and runs inside root.
ImageFixture WriteImageFixture(const ImageFixtureSpec& spec);

}  // namespace vad

#endif  // VADCLIP_VAD_SYNTHETIC_HPP_
