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

#include "vad/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "vad/error.hpp"
#include "vad/util.hpp"

namespace vad {

Image LoadPng(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    Fail(ErrorKind::kMissingFrameImage, "cannot read frame image " + path.string() +
                                            ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  Image image(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, image.pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    Fail(ErrorKind::kMissingFrameImage, "cannot decode frame image " + path.string());
  }
  return image;
}

std::vector<std::uint8_t> EncodePng(const Image& image) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
    Fail(ErrorKind::kIoError, std::string("png sizing failed: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.pixels.data(), 0,
                                 nullptr)) {
    Fail(ErrorKind::kIoError, std::string("png encoding failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

void SavePng(const Image& image, const std::filesystem::path& path) {
  const auto bytes = EncodePng(image);
  WriteFileAtomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                         bytes.size()));
}

Image Resize(const Image& image, int width, int height) {
  if (image.width == width && image.height == height) return image;
  if (image.empty() || width <= 0 || height <= 0) {
    Fail(ErrorKind::kInvalidArgument, "cannot resize an empty image");
  }
  Image out(width, height);
  const double sx = static_cast<double>(image.width) / width;
  const double sy = static_cast<double>(image.height) / height;
  // Separable: interpolate every source row horizontally once, then blend
  // row pairs vertically.
  const int row_len = width * 3;
  std::vector<int> src(row_len * 2);
  std::vector<float> weight(row_len);
  for (int x = 0; x < width; ++x) {
    const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width - 1.0);
    const int lo = static_cast<int>(fx);
    const int hi = std::min(lo + 1, image.width - 1);
    for (int c = 0; c < 3; ++c) {
      src[2 * (x * 3 + c)] = lo * 3 + c;
      src[2 * (x * 3 + c) + 1] = hi * 3 + c;
      weight[x * 3 + c] = static_cast<float>(fx - lo);
    }
  }
  std::vector<float> rows(static_cast<std::size_t>(image.height) * row_len);
  const std::size_t stride = static_cast<std::size_t>(image.width) * 3;
  for (int y = 0; y < image.height; ++y) {
    const std::uint8_t* in = image.pixels.data() + y * stride;
    float* h = rows.data() + static_cast<std::size_t>(y) * row_len;
    for (int i = 0; i < row_len; ++i) {
      const float a = in[src[2 * i]], b = in[src[2 * i + 1]];
      h[i] = a + (b - a) * weight[i];
    }
  }
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const float wy = static_cast<float>(fy - y0);
    const float* top = rows.data() + static_cast<std::size_t>(y0) * row_len;
    const float* bottom = rows.data() + static_cast<std::size_t>(y1) * row_len;
    std::uint8_t* dst = out.pixels.data() + static_cast<std::size_t>(y) * row_len;
    for (int i = 0; i < row_len; ++i) {
      // Values lie in [0, 255]: adding 0.5 and truncating rounds half up.
      const float v = top[i] + (bottom[i] - top[i]) * wy + 0.5f;
      dst[i] = static_cast<std::uint8_t>(std::min(v, 255.0f));
    }
  }
  return out;
}

Image Crop(const Image& image, int x, int y, int width, int height) {
  if (x < 0 || y < 0 || width <= 0 || height <= 0 || x + width > image.width ||
      y + height > image.height) {
    Fail(ErrorKind::kInvalidArgument, "crop window outside image");
  }
  Image out(width, height);
  for (int row = 0; row < height; ++row) {
    const auto* src = &image.pixels[(static_cast<std::size_t>(y + row) * image.width + x) * 3];
    std::copy(src, src + static_cast<std::size_t>(width) * 3,
              &out.pixels[static_cast<std::size_t>(row) * width * 3]);
  }
  return out;
}

Image FlipHorizontal(const Image& image) {
  Image out(image.width, image.height);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(image.width - 1 - x, y, c) = image.at(x, y, c);
    }
  }
  return out;
}

Image ScaleBrightness(const Image& image, double factor) {
  Image out = image;
  for (auto& p : out.pixels) {
    p = static_cast<std::uint8_t>(std::clamp(std::lround(p * factor), 0L, 255L));
  }
  return out;
}

double MeanIntensity(const Image& image) {
  if (image.empty()) return 0.0;
  std::uint64_t sum = 0;
  for (auto p : image.pixels) sum += p;
  return static_cast<double>(sum) / static_cast<double>(image.pixels.size());
}

std::string ImageDigest(const Image& image) {
  std::vector<std::uint8_t> bytes(8 + image.pixels.size());
  const auto w = static_cast<std::uint32_t>(image.width);
  const auto h = static_cast<std::uint32_t>(image.height);
  for (int i = 0; i < 4; ++i) {
    bytes[i] = static_cast<std::uint8_t>(w >> (8 * i));
    bytes[4 + i] = static_cast<std::uint8_t>(h >> (8 * i));
  }
  std::copy(image.pixels.begin(), image.pixels.end(), bytes.begin() + 8);
  return Sha256Hex(bytes);
}

}  // namespace vad
