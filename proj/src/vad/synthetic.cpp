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

#include "vad/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "vad/captioning.hpp"
#include "vad/dataset.hpp"
#include "vad/error.hpp"
#include "vad/random.hpp"
#include "vad/util.hpp"

namespace vad {

namespace {

Eigen::VectorXd RandomDirection(Rng& rng, int dim) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.Normal();
  return v / v.norm();
}

constexpr const char* kSpeakingTemplates[] = {
    "yes the person is talking with open mouth",
    "the person appears to be speaking",
    "yes they are speaking to someone",
};
constexpr const char* kSilentTemplates[] = {
    "no the person is listening quietly",
    "the person is silent with closed mouth",
    "no they are not speaking",
};

}  // namespace

FeatureSet MakeSyntheticFeatures(const SyntheticSpec& spec) {
  const int dim = kEmbeddingDim;
  Rng world(spec.world_seed);
  const Eigen::VectorXd axis = RandomDirection(world, dim);
  const Eigen::VectorXd base = RandomDirection(world, dim);

  FeatureSet out;
  for (int p = 0; p < spec.persons; ++p) {
    const std::string person = spec.person_prefix + std::to_string(p + 1);
    Rng rng = Rng::Derive(spec.seed, StableHash(person));
    const Eigen::VectorXd shift = spec.person_shift * RandomDirection(rng, dim);
    for (int k = 0; k < 2 * spec.per_class; ++k) {
      const bool speaking = k % 2 == 0;
      SampleFeatures s;
      char id[64];
      std::snprintf(id, sizeof(id), "%s/syn/%06d", person.c_str(), k);
      s.segment_id = id;
      s.person_id = person;
      s.label = speaking ? Label::kSpeaking : Label::kNotSpeaking;
      const Eigen::VectorXd centre =
          base + shift + (speaking ? 0.5 : -0.5) * spec.separation * axis;
      EmbeddingMatrix tokens(kTokensPerFrame, dim);
      const double sigma = spec.token_noise / std::sqrt(static_cast<double>(dim));
      for (int t = 0; t < kTokensPerFrame; ++t) {
        for (int d = 0; d < dim; ++d) {
          tokens(t, d) = static_cast<float>(centre(d) + sigma * rng.Normal());
        }
      }
      s.visual_views.push_back(std::move(tokens));
      if (spec.caption_mode != CaptionMode::kNone) {
        const bool says_yes = rng.Bernoulli(spec.answer_accuracy) ? speaking : !speaking;
        std::string caption;
        if (spec.caption_mode == CaptionMode::kFixed) {
          caption = ToFixedCaption(says_yes ? YesNo::kYes : YesNo::kNo).text;
        } else {
          const auto v = rng.Below(3);
          caption = says_yes ? kSpeakingTemplates[v] : kSilentTemplates[v];
        }
        s.text = HashedTextEmbedding(caption, dim, spec.world_seed);
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

Image RenderFixtureFrame(int size, int person, bool speaking, std::uint64_t seed) {
  Rng rng(seed);
  Image img;
  img.width = size;
  img.height = size;
  img.pixels.assign(static_cast<std::size_t>(size) * size * 3, 0);
  const std::uint8_t tint[3] = {static_cast<std::uint8_t>(60 + 50 * (person % 3)),
                                static_cast<std::uint8_t>(70 + 40 * ((person / 3) % 3)),
                                static_cast<std::uint8_t>(90 + 30 * (person % 2))};
  const double cx = size * 0.5, cy = size * 0.45, r = size * 0.3;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      int rgb[3] = {tint[0], tint[1], tint[2]};
      const double dx = x - cx, dy = y - cy;
      if (y > size * 0.8) {
        rgb[0] = 40; rgb[1] = 60; rgb[2] = 120;  // torso
      } else if (dx * dx + dy * dy < r * r) {
        rgb[0] = 200; rgb[1] = 160; rgb[2] = 130;  // face
      }
      const bool mouth = x >= size * 0.36 && x < size * 0.64 && y >= size * 0.56 && y < size * 0.79;
      if (mouth) {
        if (speaking) {
          const int v = ((x / 2) % 2) ? 250 : 10;
          rgb[0] = rgb[1] = rgb[2] = v;
        } else {
          rgb[0] = 150; rgb[1] = 100; rgb[2] = 90;
        }
      }
      for (int c = 0; c < 3; ++c) {
        const int noisy = rgb[c] + static_cast<int>(rng.Below(7)) - 3;
        img.pixels[(static_cast<std::size_t>(y) * size + x) * 3 + c] =
            static_cast<std::uint8_t>(std::clamp(noisy, 0, 255));
      }
    }
  }
  return img;
}

ImageFixture WriteImageFixture(const ImageFixtureSpec& spec) {
  namespace fs = std::filesystem;
  if (spec.root.empty()) Fail(ErrorKind::kInvalidArgument, "fixture root is empty");
  fs::create_directories(spec.root);
  ImageFixture fx;
  fx.annotations = spec.root / "annotations.csv";
  fx.frames_root = spec.root / "frames";
  fx.config = spec.root / "config.toml";

  std::vector<AnnotationRecord> records;
  for (int p = 0; p < spec.persons; ++p) {
    const std::string person = "p" + std::to_string(p + 1);
    fx.persons.push_back(person);
    Rng rng = Rng::Derive(spec.seed, StableHash(person));
    for (int v = 0; v < spec.videos; ++v) {
      const std::string video = "v" + std::to_string(v + 1);
      const int target = spec.segments_per_class * kSegmentLength / spec.videos;
      int done[2] = {0, 0};
      bool speaking = rng.Bernoulli(0.5);
      std::int64_t frame = 0;
      while (done[0] < target || done[1] < target) {
        const int cls = speaking ? 1 : 0;
        if (done[cls] < target) {
          const int run = std::min(5 + static_cast<int>(rng.Below(26)), target - done[cls]);
          for (int i = 0; i < run; ++i, ++frame) {
            const auto seed = Rng::Derive(spec.seed, StableHash(person + video) + frame).NextU64();
            const Image img = RenderFixtureFrame(spec.frame_size, p, speaking, seed);
            const auto path = FramePath(fx.frames_root, video, person, frame);
            fs::create_directories(path.parent_path());
            SavePng(img, path);
            AnnotationRecord rec;
            rec.video_id = video;
            rec.frame_index = frame;
            rec.person_id = person;
            rec.bbox = {0, 0, spec.frame_size, spec.frame_size};
            rec.label = speaking ? Label::kSpeaking : Label::kNotSpeaking;
            records.push_back(std::move(rec));
          }
          done[cls] += run;
        }
        speaking = !speaking;
      }
    }
  }
  fx.frames = records.size();
  AnnotationTable table = NormalizeTable(std::move(records));
  table.person_order = fx.persons;
  WriteFileAtomic(fx.annotations, FormatAnnotations(table));

  std::string config = "# Synthetic image fixture.\n[data]\n";
  config += "dataset = \"fixture\"\n";
  config += "annotations = \"annotations.csv\"\n";
  config += "frames_root = \"frames\"\n";
  config += "annotations_sha256 = \"" + Sha256File(fx.annotations) + "\"\n";
  config += "\n[encoder]\nbackend = \"mock\"\ncache_dir = \"cache/embeddings\"\n";
  config += "\n[captioning]\nmode = \"fixed\"\ncache = \"cache/captions.jsonl\"\n";
  config += "\n[vlm]\nclient = \"mock\"\n";
  config += "\n[fusion]\narch = \"mlp\"\n";
  config += "\n[train]\nlearning_rate = 0.001\nbatch_size = 16\nmax_epochs = 30\nseed = 3\n";
  config += "\n[run]\noutput_root = \"runs\"\n";
  WriteFileAtomic(fx.config, config);
  return fx;
}

}  // namespace vad
