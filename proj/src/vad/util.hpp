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

#ifndef VADCLIP_VAD_UTIL_HPP_
#define VADCLIP_VAD_UTIL_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vad {

// SHA-256 as lowercase hex.
std::string Sha256Hex(std::span<const std::uint8_t> bytes);
std::string Sha256Hex(std::string_view text);
std::string Sha256File(const std::filesystem::path& path);

std::uint32_t Crc32(std::span<const std::uint8_t> bytes);

std::string Base64Encode(std::span<const std::uint8_t> bytes);

// 64-bit FNV-1a; used only for deterministic seeding from strings.
std::uint64_t StableHash(std::string_view text);

std::string ReadFile(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over the target.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view bytes);

std::string Trim(std::string_view text);
std::vector<std::string> Split(std::string_view text, char sep);
std::string ToLower(std::string_view text);

// printf-style "%.*f" without locale surprises.
std::string FormatFixed(double value, int decimals);

}  // namespace vad

#endif  // VADCLIP_VAD_UTIL_HPP_
