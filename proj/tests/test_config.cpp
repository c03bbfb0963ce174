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

#include <fstream>

#include "doctest.h"
#include "test_util.hpp"
#include "vad/config.hpp"
#include "vad/error.hpp"

namespace vad {
namespace {

std::string MessageOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConfigError);
    return e.what();
  }
  FAIL("expected a config error");
  return {};
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults follow the training settings") {
  const Config c;
  CHECK(c.GetDouble("train.learning_rate") == 1e-3);
  CHECK(c.GetDouble("train.weight_decay") == 1e-4);
  CHECK(c.GetInt("train.max_epochs") == 50);
  CHECK(c.GetInt("train.batch_size") == 128);
  CHECK(c.GetString("fusion.arch") == "mlp");
  CHECK(c.GetString("eval.std") == "population");
  const auto t = c.train();
  CHECK(t.batch_size == 128);
  CHECK(t.fusion_arch == FusionArch::kMlp);
}

TEST_CASE("file, environment and overrides layer in order") {
  Config c;
  c.LoadText("# settings\n[train]\nlearning_rate = 0.01\nbatch_size = 64\nseed = 3\n\n[fusion]\narch = \"transformer\"\n");
  CHECK(c.GetDouble("train.learning_rate") == 0.01);
  std::string a = "VADCTL_TRAIN_BATCH_SIZE=32", b = "VADCTL_TRAIN_SEED=4", other = "HOME=/root";
  char* env[] = {a.data(), b.data(), other.data(), nullptr};
  c.ApplyEnv(env);
  CHECK(c.GetInt("train.batch_size") == 32);
  c.SetAssignment("train.seed=9");
  CHECK(c.GetInt("train.seed") == 9);
  CHECK(c.GetDouble("train.learning_rate") == 0.01);
  CHECK(c.GetString("fusion.arch") == "transformer");
  CHECK(c.train().fusion_arch == FusionArch::kTransformer);
}

TEST_CASE("unknown keys and bad values") {
  Config c;
  CHECK(MessageOf([&] { c.LoadText("[train]\nlearning_rate = 0.001\nlearnig_rate = 0.01\n"); }).find("3") !=
        std::string::npos);
  CHECK(MessageOf([&] { c.LoadText("[training]\nseed = 1\n"); }).find("training") != std::string::npos);
  MessageOf([&] { c.LoadText("[train]\nbatch_size = big\n"); });
  MessageOf([&] { c.LoadText("[train]\nseed\n"); });
  MessageOf([&] { c.Set("train.nope", "1"); });
  MessageOf([&] { c.SetAssignment("train.seed"); });
  std::string bad = "VADCTL_TRAIN_NOPE=1";
  char* env[] = {bad.data(), nullptr};
  MessageOf([&] { c.ApplyEnv(env); });
  MessageOf([] { Config::FromFile("/nonexistent/config.toml"); });
}

TEST_CASE("dump round-trips and hashes canonically") {
  Config a;
  a.LoadText("[train]\nlearning_rate = 1e-3\nseed = 7\n[data]\ndataset = \"columbia\"\n");
  Config b;
  b.LoadText(a.Dump());
  CHECK(b.Dump() == a.Dump());
  CHECK(b.Hash() == a.Hash());
  CHECK(a.Hash().size() == 12);
  Config c = a;
  c.Set("run.log_level", "debug");
  c.Set("run.jobs", "4");
  CHECK(c.Hash() == a.Hash());
  c.Set("train.seed", "8");
  CHECK(c.Hash() != a.Hash());
  CHECK(a.ToJson()["train"]["seed"] == 7);
}

TEST_CASE("relative paths resolve against the config file") {
  test::TempDir dir("config");
  std::filesystem::create_directories(dir / "exp");
  std::ofstream(dir / "exp" / "c.toml") << "[data]\nannotations = \"data/ann.csv\"\nframes_root = \"/abs/frames\"\n";
  const auto c = Config::FromFile(dir / "exp" / "c.toml");
  CHECK(c.GetPath("data.annotations") == dir / "exp" / "data/ann.csv");
  CHECK(c.GetPath("data.frames_root") == "/abs/frames");
}

}  // TEST_SUITE

}  // namespace vad
