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

#include "vad/tensor_io.hpp"

#include <cstring>

#include "vad/error.hpp"
#include "vad/util.hpp"

namespace vad {

namespace {

void AppendLE(std::string& out, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t ReadLE(std::string_view b, std::size_t at, int n) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[at + i])) << (8 * i);
  }
  return v;
}

[[noreturn]] void Corrupt(const std::string& why) {
  Fail(ErrorKind::kCorruptCheckpoint, "corrupt checkpoint: " + why);
}

}  // namespace

const Mat* TensorFile::Find(const std::string& name) const {
  for (const auto& [n, m] : tensors) {
    if (n == name) return &m;
  }
  return nullptr;
}

const Mat& TensorFile::At(const std::string& name) const {
  const Mat* m = Find(name);
  if (!m) Corrupt("missing tensor '" + name + "'");
  return *m;
}

std::string EncodeTensorFile(const TensorFile& file) {
  nlohmann::json header = file.header;
  header["tensors"] = nlohmann::json::array();
  for (const auto& [name, m] : file.tensors) {
    header["tensors"].push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  }
  const std::string text = header.dump();
  std::string out = "VCKP";
  AppendLE(out, 1, 4);
  AppendLE(out, text.size(), 8);
  out += text;
  for (const auto& [name, m] : file.tensors) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        std::uint64_t bits;
        const double v = m(r, c);
        std::memcpy(&bits, &v, 8);
        AppendLE(out, bits, 8);
      }
    }
  }
  const auto crc = Crc32(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(out.data()), out.size()));
  AppendLE(out, crc, 4);
  return out;
}

TensorFile DecodeTensorFile(std::string_view bytes) {
  if (bytes.size() < 20 || bytes.substr(0, 4) != "VCKP") Corrupt("bad magic");
  const auto stored_crc = ReadLE(bytes, bytes.size() - 4, 4);
  const auto crc = Crc32(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size() - 4));
  if (crc != stored_crc) Corrupt("checksum mismatch");
  if (ReadLE(bytes, 4, 4) != 1) Corrupt("unsupported version");
  const auto header_len = ReadLE(bytes, 8, 8);
  if (16 + header_len + 4 > bytes.size()) Corrupt("truncated header");
  TensorFile file;
  try {
    file.header = nlohmann::json::parse(bytes.substr(16, header_len));
  } catch (const nlohmann::json::exception& e) {
    Corrupt(std::string("header: ") + e.what());
  }
  std::size_t at = 16 + header_len;
  const std::size_t end = bytes.size() - 4;
  try {
    for (const auto& t : file.header.at("tensors")) {
      const auto rows = t.at("rows").get<Eigen::Index>();
      const auto cols = t.at("cols").get<Eigen::Index>();
      if (rows < 0 || cols < 0 || at + static_cast<std::size_t>(rows * cols) * 8 > end) {
        Corrupt("tensor payload out of range");
      }
      Mat m(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          const std::uint64_t bits = ReadLE(bytes, at, 8);
          std::memcpy(&m(r, c), &bits, 8);
          at += 8;
        }
      }
      file.tensors.emplace_back(t.at("name").get<std::string>(), std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    Corrupt(std::string("tensor table: ") + e.what());
  }
  if (at != end) Corrupt("trailing bytes");
  file.header.erase("tensors");
  return file;
}

void SaveTensorFile(const TensorFile& file, const std::filesystem::path& path) {
  WriteFileAtomic(path, EncodeTensorFile(file));
}

TensorFile LoadTensorFile(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    Fail(ErrorKind::kMissingFile, "checkpoint not found: " + path.string());
  }
  return DecodeTensorFile(ReadFile(path));
}

}  // namespace vad
