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

#include "vad/config.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <sstream>

#include "vad/error.hpp"
#include "vad/util.hpp"

namespace vad {

namespace {

using Type = Config::Type;

struct Declared {
  const char* key;
  Type type;
  const char* value;
  const char* help;
};

// clang-format off
constexpr Declared kSchema[] = {
  {"data.dataset", Type::kString, "dataset", "dataset name used in report paths"},
  {"data.annotations", Type::kString, "", "annotation CSV"},
  {"data.frames_root", Type::kString, "", "root of <video>/<person>/<frame>.png"},
  {"data.annotations_sha256", Type::kString, "", "expected checksum of the annotation CSV"},
  {"data.segment_length", Type::kInt, "10", "frames per segment"},
  {"data.person_order", Type::kString, "", "comma-separated report column order"},
  {"data.augment_views", Type::kInt, "0", "augmented embedding copies per segment"},
  {"data.test_dataset", Type::kString, "", "cross-dataset test name"},
  {"data.test_annotations", Type::kString, "", "cross-dataset test CSV"},
  {"data.test_frames_root", Type::kString, "", "cross-dataset test frames"},
  {"encoder.backend", Type::kString, "mock", "mock | linear-pixel | remote"},
  {"encoder.mode", Type::kString, "pretrained", "pretrained | finetuned"},
  {"encoder.endpoint", Type::kString, "", "remote embedding server"},
  {"encoder.model", Type::kString, "ViT-B/32", "remote model name"},
  {"encoder.seed", Type::kInt, "0", "local backend seed"},
  {"encoder.token_policy", Type::kString, "error", "error | truncate"},
  {"encoder.cache_dir", Type::kString, "cache/embeddings", "embedding cache root"},
  {"encoder.finetune_epochs", Type::kInt, "5", "backbone fine-tuning epochs"},
  {"encoder.finetune_learning_rate", Type::kDouble, "0.001", "backbone fine-tuning step size"},
  {"captioning.mode", Type::kString, "fixed", "fixed | variable | none"},
  {"captioning.cache", Type::kString, "cache/captions.jsonl", "caption cache file"},
  {"captioning.retries", Type::kInt, "3", "VLM attempts per caption"},
  {"captioning.backoff_ms", Type::kInt, "200", "pause between attempts"},
  {"vlm.client", Type::kString, "mock", "mock | http | fixture"},
  {"vlm.endpoint", Type::kString, "", "http client endpoint"},
  {"vlm.model", Type::kString, "llava-13b", "model name recorded in the cache"},
  {"vlm.fixture", Type::kString, "", "recorded responses for the fixture client"},
  {"vlm.timeout_ms", Type::kInt, "60000", "http timeout"},
  {"vlm.mock_behavior", Type::kString, "heuristic", "heuristic | always_yes | always_no"},
  {"fusion.arch", Type::kString, "mlp", "mlp | transformer"},
  {"train.learning_rate", Type::kDouble, "0.001", "0.01 | 0.001 | 0.0001"},
  {"train.weight_decay", Type::kDouble, "0.0001", "L2 penalty"},
  {"train.max_epochs", Type::kInt, "50", "epochs per fold"},
  {"train.batch_size", Type::kInt, "128", "balanced batch size"},
  {"train.optimizer", Type::kString, "adam", "adam"},
  {"train.seed", Type::kInt, "0", "training seed"},
  {"train.patience", Type::kInt, "0", "early-stop patience, 0 = final epoch"},
  {"train.validation_fraction", Type::kDouble, "0.1", "train-split validation slice"},
  {"train.threshold", Type::kDouble, "0", "logit decision threshold"},
  {"eval.std", Type::kString, "population", "population | sample"},
  {"eval.allow_partial", Type::kBool, "false", "keep reports with failed folds"},
  {"run.output_root", Type::kString, "runs", "run directories are created here"},
  {"run.jobs", Type::kInt, "1", "worker threads for embed and caption"},
  {"run.log_level", Type::kString, "info", "debug | info | warn | error"},
};
// clang-format on

[[noreturn]] void Bad(std::string_view origin, const std::string& msg) {
  Fail(ErrorKind::kConfigError, std::string(origin) + ": " + msg);
}

std::string Unquote(std::string_view raw) {
  const std::string trimmed = Trim(raw);
  const std::string_view v = trimmed;
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      if (v[i] == '\\' && i + 2 < v.size()) {
        const char n = v[++i];
        out.push_back(n == 'n' ? '\n' : n == 't' ? '\t' : n);
      } else {
        out.push_back(v[i]);
      }
    }
    return out;
  }
  return std::string(v);
}

std::string Canonical(Type type, std::string_view raw, const std::string& key,
                      std::string_view origin) {
  const std::string v = Unquote(raw);
  switch (type) {
    case Type::kString:
      return v;
    case Type::kInt: {
      long long out = 0;
      const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
        Bad(origin, key + " expects an integer, got '" + v + "'");
      }
      return std::to_string(out);
    }
    case Type::kDouble: {
      double out = 0;
      const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec != std::errc() || p != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
        Bad(origin, key + " expects a number, got '" + v + "'");
      }
      // Shortest round-trip form, in fixed notation unless that is long.
      char buf[64];
      auto r = std::to_chars(buf, buf + sizeof(buf), out, std::chars_format::fixed);
      if (r.ec != std::errc() || r.ptr - buf > 16) {
        r = std::to_chars(buf, buf + sizeof(buf), out, std::chars_format::scientific);
      }
      return std::string(buf, r.ptr);
    }
    case Type::kBool: {
      const std::string l = ToLower(v);
      if (l == "true" || l == "1" || l == "yes") return "true";
      if (l == "false" || l == "0" || l == "no") return "false";
      Bad(origin, key + " expects true or false, got '" + v + "'");
    }
  }
  return v;
}

std::string Quote(const std::string& v) {
  std::string out = "\"";
  for (char c : v) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

Config::Config() {
  for (const auto& d : kSchema) {
    index_[d.key] = entries_.size();
    entries_.push_back({d.key, d.type, Canonical(d.type, d.value, d.key, "default"), d.help});
  }
}

Config Config::FromFile(const std::filesystem::path& path) {
  Config c;
  c.LoadFile(path);
  return c;
}

void Config::LoadFile(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    Fail(ErrorKind::kConfigError, "config file not found: " + path.string());
  }
  base_dir_ = std::filesystem::absolute(path).parent_path();
  LoadText(ReadFile(path), path.string());
}

void Config::LoadText(std::string_view text, std::string_view origin) {
  std::string section;
  int line_no = 0;
  for (const auto& raw : Split(text, '\n')) {
    ++line_no;
    const std::string where = std::string(origin) + ":" + std::to_string(line_no);
    // Strip a trailing comment outside quotes.
    std::string line;
    bool quoted = false;
    for (char c : raw) {
      if (c == '"') quoted = !quoted;
      if (c == '#' && !quoted) break;
      line.push_back(c);
    }
    const std::string t = Trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') Bad(where, "malformed section header '" + t + "'");
      section = Trim(std::string_view(t).substr(1, t.size() - 2));
      bool known = false;
      for (const auto& e : entries_) known |= e.key.rfind(section + ".", 0) == 0;
      if (!known) Bad(where, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) Bad(where, "expected key = value");
    const std::string key = Trim(std::string_view(t).substr(0, eq));
    if (section.empty()) Bad(where, "key '" + key + "' outside a section");
    const std::string full = section + "." + key;
    Entry& e = Find(full, where);
    e.value = Canonical(e.type, std::string_view(t).substr(eq + 1), full, where);
  }
}

void Config::ApplyEnv(char** envp) {
  if (!envp) return;
  for (char** p = envp; *p; ++p) {
    const std::string_view kv(*p);
    if (kv.rfind("VADCTL_", 0) != 0) continue;
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) continue;
    const std::string name(kv.substr(0, eq));
    bool matched = false;
    for (auto& e : entries_) {
      std::string env = "VADCTL_";
      for (char c : e.key) {
        env.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
      }
      if (env == name) {
        e.value = Canonical(e.type, kv.substr(eq + 1), e.key, "environment " + name);
        matched = true;
      }
    }
    if (!matched) Bad("environment", "unknown variable " + name);
  }
}

void Config::Set(const std::string& key, std::string_view value) {
  Entry& e = Find(key, "override");
  e.value = Canonical(e.type, value, key, "override");
}

void Config::SetAssignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) Bad("override", "expected key=value, got '" + std::string(assignment) + "'");
  Set(Trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

bool Config::Has(const std::string& key) const { return index_.count(key) > 0; }

Config::Entry& Config::Find(const std::string& key, std::string_view origin) {
  const auto it = index_.find(key);
  if (it == index_.end()) Bad(origin, "unknown key '" + key + "'");
  return entries_[it->second];
}

const Config::Entry& Config::Find(const std::string& key) const {
  const auto it = index_.find(key);
  if (it == index_.end()) Fail(ErrorKind::kInternal, "undeclared config key '" + key + "'");
  return entries_[it->second];
}

const std::string& Config::GetString(const std::string& key) const { return Find(key).value; }

long long Config::GetInt(const std::string& key) const { return std::stoll(Find(key).value); }

double Config::GetDouble(const std::string& key) const { return std::stod(Find(key).value); }

bool Config::GetBool(const std::string& key) const { return Find(key).value == "true"; }

std::filesystem::path Config::GetPath(const std::string& key) const {
  const std::filesystem::path p = GetString(key);
  if (p.empty() || p.is_absolute() || base_dir_.empty()) return p;
  return base_dir_ / p;
}

std::string Config::Dump() const {
  std::string out;
  std::string section;
  for (const auto& e : entries_) {
    const auto dot = e.key.find('.');
    const std::string s = e.key.substr(0, dot);
    if (s != section) {
      if (!section.empty()) out += "\n";
      out += "[" + s + "]\n";
      section = s;
    }
    out += e.key.substr(dot + 1) + " = ";
    out += e.type == Type::kString ? Quote(e.value) : e.value;
    out += "\n";
  }
  return out;
}

nlohmann::ordered_json Config::ToJson() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& e : entries_) {
    const auto dot = e.key.find('.');
    auto& slot = j[e.key.substr(0, dot)][e.key.substr(dot + 1)];
    switch (e.type) {
      case Type::kString: slot = e.value; break;
      case Type::kInt: slot = std::stoll(e.value); break;
      case Type::kDouble: slot = std::stod(e.value); break;
      case Type::kBool: slot = e.value == "true"; break;
    }
  }
  return j;
}

std::string Config::Hash() const {
  // Parallelism and verbosity never change results, so they stay out of the
  // run identity.
  Config stable = *this;
  for (auto& e : stable.entries_) {
    if (e.key == "run.jobs" || e.key == "run.log_level") e.value.clear();
  }
  return Sha256Hex(stable.Dump()).substr(0, 12);
}

TrainConfig Config::train() const {
  TrainConfig c;
  c.learning_rate = GetDouble("train.learning_rate");
  c.weight_decay = GetDouble("train.weight_decay");
  c.max_epochs = static_cast<int>(GetInt("train.max_epochs"));
  c.batch_size = static_cast<int>(GetInt("train.batch_size"));
  c.optimizer = GetString("train.optimizer");
  const long long seed = GetInt("train.seed");
  if (seed < 0) Fail(ErrorKind::kConfigError, "train.seed must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  try {
    c.fusion_arch = ParseFusionArch(GetString("fusion.arch"));
    c.encoder_mode = ParseEncoderMode(GetString("encoder.mode"));
  } catch (const Error& e) {
    Fail(ErrorKind::kConfigError, e.what());
  }
  c.caption_mode = ParseCaptionMode(GetString("captioning.mode"));
  c.patience = static_cast<int>(GetInt("train.patience"));
  c.validation_fraction = GetDouble("train.validation_fraction");
  c.threshold = GetDouble("train.threshold");
  c.Validate();
  return c;
}

}  // namespace vad
