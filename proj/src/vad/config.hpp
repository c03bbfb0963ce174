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

#ifndef VADCLIP_VAD_CONFIG_HPP_
#define VADCLIP_VAD_CONFIG_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vad/training.hpp"

namespace vad {

// Flat "section.key" settings read from a TOML-like file:
//
//   # comment
//   [train]
//   learning_rate = 0.001
//   [data]
//   annotations = "data/ann.csv"
//
// Every key is declared up front with a type and default; anything else is
// a ConfigError. Precedence: Set() > ApplyEnv() > LoadFile() > defaults.
class Config {
 public:
  enum class Type { kString, kInt, kDouble, kBool };
  struct Entry {
    std::string key;
    Type type = Type::kString;
    std::string value;  // canonical text form
    std::string help;
  };

  Config();

  static Config FromFile(const std::filesystem::path& path);
  void LoadFile(const std::filesystem::path& path);
  void LoadText(std::string_view text, std::string_view origin = "<string>");
  // VADCTL_<SECTION>_<KEY>, e.g. VADCTL_TRAIN_LEARNING_RATE.
  void ApplyEnv(char** envp);
  // `value` is the bare text (quotes optional for strings).
  void Set(const std::string& key, std::string_view value);
  // "section.key=value".
  void SetAssignment(std::string_view assignment);

  bool Has(const std::string& key) const;
  const std::string& GetString(const std::string& key) const;
  long long GetInt(const std::string& key) const;
  double GetDouble(const std::string& key) const;
  bool GetBool(const std::string& key) const;
  // Relative paths resolve against the directory of the config file.
  std::filesystem::path GetPath(const std::string& key) const;
  const std::filesystem::path& base_dir() const { return base_dir_; }
  void set_base_dir(std::filesystem::path dir) { base_dir_ = std::move(dir); }

  // Canonical text: every section and key in declaration order.
  std::string Dump() const;
  nlohmann::ordered_json ToJson() const;
  // 12 hex digits of sha256(Dump()).
  std::string Hash() const;
  const std::vector<Entry>& entries() const { return entries_; }

  TrainConfig train() const;

 private:
  Entry& Find(const std::string& key, std::string_view origin);
  const Entry& Find(const std::string& key) const;

  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
  std::filesystem::path base_dir_;
};

}  // namespace vad

#endif  // VADCLIP_VAD_CONFIG_HPP_
