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

#ifndef VADCLIP_VAD_IMAGE_HPP_
#define VADCLIP_VAD_IMAGE_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vad {

// 8-bit RGB image, row-major, channels interleaved.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t& at(int x, int y, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  bool empty() const { return pixels.empty(); }
  friend bool operator==(const Image&, const Image&) = default;
};

Image LoadPng(const std::filesystem::path& path);
void SavePng(const Image& image, const std::filesystem::path& path);
std::vector<std::uint8_t> EncodePng(const Image& image);

// Bilinear resampling with half-pixel centres. Same-size input is returned
// unchanged.
Image Resize(const Image& image, int width, int height);

Image Crop(const Image& image, int x, int y, int width, int height);
Image FlipHorizontal(const Image& image);
Image ScaleBrightness(const Image& image, double factor);

// Mean over all pixels and channels, in [0, 255].
double MeanIntensity(const Image& image);

// SHA-256 over the dimensions and pixel bytes; stable identity of an image.
std::string ImageDigest(const Image& image);

}  // namespace vad

#endif  // VADCLIP_VAD_IMAGE_HPP_
