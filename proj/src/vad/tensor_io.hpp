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

#ifndef VADCLIP_VAD_TENSOR_IO_HPP_
#define VADCLIP_VAD_TENSOR_IO_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "vad/layers.hpp"

namespace vad {

// Named float64 tensors behind a JSON header, with a trailing CRC-32:
//   "VCKP" | u32 version | u64 header length | header JSON |
//   tensors in header["tensors"] order, row-major little-endian float64 |
//   u32 CRC-32 of every preceding byte.
// The header gains a "tensors" list of {name, rows, cols}.
struct TensorFile {
  nlohmann::json header = nlohmann::json::object();
  std::vector<std::pair<std::string, Mat>> tensors;

  const Mat* Find(const std::string& name) const;
  const Mat& At(const std::string& name) const;  // throws kCorruptCheckpoint
};

std::string EncodeTensorFile(const TensorFile& file);
// Throws kCorruptCheckpoint on any structural or checksum problem.
TensorFile DecodeTensorFile(std::string_view bytes);

void SaveTensorFile(const TensorFile& file, const std::filesystem::path& path);
TensorFile LoadTensorFile(const std::filesystem::path& path);

}  // namespace vad

#endif  // VADCLIP_VAD_TENSOR_IO_HPP_
