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

#include "vad/embedding_cache.hpp"

#include <spdlog/spdlog.h>

#include <cstring>

#include "json.hpp"
#include "vad/error.hpp"
#include "vad/util.hpp"

namespace vad {

namespace {

constexpr char kMagic[4] = {'V', 'E', 'M', 'B'};
constexpr std::size_t kHeaderBytes = 32;

void PutU16(std::string& b, std::size_t at, std::uint16_t v) {
  for (int i = 0; i < 2; ++i) b[at + i] = static_cast<char>((v >> (8 * i)) & 0xff);
}
void PutU32(std::string& b, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[at + i] = static_cast<char>((v >> (8 * i)) & 0xff);
}
void PutU64(std::string& b, std::size_t at, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b[at + i] = static_cast<char>((v >> (8 * i)) & 0xff);
}
std::uint64_t GetLE(std::string_view b, std::size_t at, int n) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[at + i])) << (8 * i);
  return v;
}

std::string SafeFileStem(const std::string& id) {
  std::string stem;
  for (char c : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    stem.push_back(ok ? c : '_');
  }
  if (stem.size() > 96) stem.resize(96);
  return stem + "-" + Sha256Hex(id).substr(0, 12);
}

}  // namespace

std::string TextCacheId(std::string_view caption) {
  return "text-" + Sha256Hex(caption).substr(0, 32);
}

EmbeddingCache::EmbeddingCache(std::filesystem::path root) : root_(std::move(root)) {}

EmbeddingCache::~EmbeddingCache() {
  try {
    Flush();
  } catch (const std::exception& e) {
    spdlog::warn("embedding cache index flush failed: {}", e.what());
  }
}

std::filesystem::path EmbeddingCache::EntryPath(const CacheKey& key) const {
  return root_ / key.backend / key.mode / (SafeFileStem(key.id) + ".emb");
}

std::string EmbeddingCache::Encode(const EmbeddingMatrix& value) {
  const std::size_t payload = static_cast<std::size_t>(value.size()) * sizeof(float);
  std::string bytes(kHeaderBytes + payload, '\0');
  std::memcpy(bytes.data(), kMagic, 4);
  PutU16(bytes, 4, 1);
  PutU16(bytes, 6, 1);
  PutU32(bytes, 8, static_cast<std::uint32_t>(value.rows()));
  PutU32(bytes, 12, static_cast<std::uint32_t>(value.cols()));
  PutU64(bytes, 16, payload);
  for (Eigen::Index i = 0; i < value.size(); ++i) {
    std::uint32_t bits;
    const float f = value.data()[i];
    std::memcpy(&bits, &f, 4);
    PutU32(bytes, kHeaderBytes + 4 * static_cast<std::size_t>(i), bits);
  }
  const auto crc = Crc32(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(bytes.data()) + kHeaderBytes, payload));
  PutU32(bytes, 24, crc);
  return bytes;
}

EmbeddingMatrix EmbeddingCache::Decode(std::string_view bytes) {
  auto corrupt = [](const std::string& why) -> void {
    Fail(ErrorKind::kCorruptCacheEntry, "corrupt embedding cache entry: " + why);
  };
  if (bytes.size() < kHeaderBytes) corrupt("truncated header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) corrupt("bad magic");
  if (GetLE(bytes, 4, 2) != 1 || GetLE(bytes, 6, 2) != 1) corrupt("unsupported version/dtype");
  const auto rows = GetLE(bytes, 8, 4);
  const auto cols = GetLE(bytes, 12, 4);
  const auto payload = GetLE(bytes, 16, 8);
  if (payload != rows * cols * 4 || bytes.size() != kHeaderBytes + payload) {
    corrupt("size mismatch");
  }
  const auto crc = Crc32(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(bytes.data()) + kHeaderBytes, payload));
  if (crc != GetLE(bytes, 24, 4)) corrupt("checksum mismatch");
  EmbeddingMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const auto bits = static_cast<std::uint32_t>(GetLE(bytes, kHeaderBytes + 4 * static_cast<std::size_t>(i), 4));
    std::memcpy(m.data() + i, &bits, 4);
  }
  return m;
}

void EmbeddingCache::Put(const CacheKey& key, const EmbeddingMatrix& value) {
  const auto path = EntryPath(key);
  const auto bytes = Encode(value);
  WriteFileAtomic(path, bytes);
  IndexEntry entry;
  entry.file = path.filename().string();
  entry.rows = static_cast<std::uint32_t>(value.rows());
  entry.cols = static_cast<std::uint32_t>(value.cols());
  entry.crc = static_cast<std::uint32_t>(GetLE(bytes, 24, 4));
  std::lock_guard<std::mutex> lock(mutex_);
  pending_[path.parent_path()][key.id] = entry;
}

EmbeddingCache::Lookup EmbeddingCache::Find(const CacheKey& key) const {
  Lookup out;
  const auto path = EntryPath(key);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return out;
  try {
    out.value = Decode(ReadFile(path));
    out.status = Status::kHit;
  } catch (const Error& e) {
    out.status = Status::kCorrupt;
    out.detail = path.string() + ": " + e.what();
  }
  return out;
}

std::optional<EmbeddingMatrix> EmbeddingCache::Get(const CacheKey& key) const {
  auto found = Find(key);
  if (found.status == Status::kCorrupt) {
    spdlog::warn("{}; treating as a miss", found.detail);
    return std::nullopt;
  }
  if (found.status == Status::kMiss) return std::nullopt;
  return std::move(found.value);
}

void EmbeddingCache::Flush() {
  std::map<std::filesystem::path, std::map<std::string, IndexEntry>> todo;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    todo.swap(pending_);
  }
  for (const auto& [dir, entries] : todo) {
    const auto index_path = dir / "index.json";
    nlohmann::json index = nlohmann::json::object();
    if (std::filesystem::exists(index_path)) {
      try {
        index = nlohmann::json::parse(ReadFile(index_path));
      } catch (const std::exception&) {
        spdlog::warn("rebuilding unreadable cache index {}", index_path.string());
        index = nlohmann::json::object();
      }
    }
    index["backend"] = dir.parent_path().filename().string();
    index["mode"] = dir.filename().string();
    auto& listed = index["entries"];
    if (!listed.is_object()) listed = nlohmann::json::object();
    for (const auto& [id, e] : entries) {
      listed[id] = {{"file", e.file}, {"rows", e.rows}, {"cols", e.cols}, {"crc32", e.crc}};
    }
    WriteFileAtomic(index_path, index.dump(1) + "\n");
  }
}

std::vector<EmbeddingCache::EntryReport> EmbeddingCache::Scan(const std::filesystem::path& root) {
  std::vector<EntryReport> out;
  std::error_code ec;
  if (!std::filesystem::exists(root, ec)) return out;
  for (const auto& item : std::filesystem::recursive_directory_iterator(root, ec)) {
    if (!item.is_regular_file() || item.path().extension() != ".emb") continue;
    EntryReport r;
    r.path = item.path();
    r.bytes = item.file_size();
    try {
      Decode(ReadFile(item.path()));
    } catch (const Error& e) {
      r.ok = false;
      r.detail = e.what();
    }
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  return out;
}

}  // namespace vad
