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

#ifndef VADCLIP_VAD_EMBEDDING_CACHE_HPP_
#define VADCLIP_VAD_EMBEDDING_CACHE_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "vad/encoders.hpp"

namespace vad {

struct CacheKey {
  std::string id;       // segment id, or TextCacheId(caption)
  std::string backend;  // backend name
  std::string mode;     // encoder mode name
};

std::string TextCacheId(std::string_view caption);

// One file per entry under <root>/<backend>/<mode>/<id>.emb:
//   bytes  0..3   magic "VEMB"
//          4..5   version (1)     6..7   dtype (1 = float32)
//          8..11  rows            12..15 cols
//         16..23  payload bytes   24..27 CRC-32 of payload   28..31 zero
// followed by rows*cols little-endian float32, row-major. Each namespace
// directory also carries an index.json listing its entries.
class EmbeddingCache {
 public:
  enum class Status { kHit, kMiss, kCorrupt };

  struct Lookup {
    Status status = Status::kMiss;
    EmbeddingMatrix value;
    std::string detail;
  };

  explicit EmbeddingCache(std::filesystem::path root);
  ~EmbeddingCache();

  EmbeddingCache(const EmbeddingCache&) = delete;
  EmbeddingCache& operator=(const EmbeddingCache&) = delete;

  // Atomic: write temp then rename. Safe from several threads.
  void Put(const CacheKey& key, const EmbeddingMatrix& value);
  Lookup Find(const CacheKey& key) const;
  // Corrupt entries are reported as a miss with a warning.
  std::optional<EmbeddingMatrix> Get(const CacheKey& key) const;

  // Merges the in-memory index into each touched namespace's index.json.
  void Flush();

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path EntryPath(const CacheKey& key) const;

  static std::string Encode(const EmbeddingMatrix& value);
  // Throws kCorruptCacheEntry.
  static EmbeddingMatrix Decode(std::string_view bytes);

  struct EntryReport {
    std::filesystem::path path;
    std::uintmax_t bytes = 0;
    bool ok = true;
    std::string detail;
  };
  // Every .emb file below `root`, verified.
  static std::vector<EntryReport> Scan(const std::filesystem::path& root);

 private:
  struct IndexEntry {
    std::string file;
    std::uint32_t rows = 0, cols = 0, crc = 0;
  };

  std::filesystem::path root_;
  mutable std::mutex mutex_;
  // namespace dir -> id -> entry
  std::map<std::filesystem::path, std::map<std::string, IndexEntry>> pending_;
};

}  // namespace vad

#endif  // VADCLIP_VAD_EMBEDDING_CACHE_HPP_
