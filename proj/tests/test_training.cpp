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

#include <cmath>
#include <set>

#include "doctest.h"
#include "test_util.hpp"
#include "vad/error.hpp"
#include "vad/optimizer.hpp"
#include "vad/synthetic.hpp"
#include "vad/tensor_io.hpp"
#include "vad/training.hpp"
#include "vad/util.hpp"

namespace vad {
namespace {

FeatureSet Small(int persons = 2, int per_class = 16, CaptionMode mode = CaptionMode::kFixed) {
  SyntheticSpec spec;
  spec.persons = persons;
  spec.per_class = per_class;
  spec.caption_mode = mode;
  return MakeSyntheticFeatures(spec);
}

TrainConfig Quick(int epochs = 3) {
  TrainConfig c;
  c.batch_size = 8;
  c.max_epochs = epochs;
  c.seed = 5;
  return c;
}

FoldSpec FoldOf(const std::string& held_out, std::set<std::string> train) {
  return {held_out, std::move(train)};
}

double MaxParamDiff(const TensorFile& a, const TensorFile& b) {
  double worst = 0;
  for (const auto& [name, m] : a.tensors) {
    if (name.rfind("param.", 0) != 0) continue;
    worst = std::max(worst, (m - b.At(name)).cwiseAbs().maxCoeff());
  }
  return worst;
}

ErrorKind KindOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kInternal;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.Validate());
  CHECK(c.learning_rate == 1e-3);
  CHECK(c.weight_decay == 1e-4);
  CHECK(c.max_epochs == 50);
  CHECK(c.batch_size == 128);
  for (double lr : {1e-2, 1e-4}) {
    c.learning_rate = lr;
    CHECK_NOTHROW(c.Validate());
  }
  c.learning_rate = 5e-3;
  CHECK(KindOf([&] { c.Validate(); }) == ErrorKind::kConfigError);
  c = {};
  c.batch_size = 7;
  CHECK(KindOf([&] { c.Validate(); }) == ErrorKind::kConfigError);
  c = {};
  c.optimizer = "sgd";
  CHECK(KindOf([&] { c.Validate(); }) == ErrorKind::kConfigError);
  c = {};
  c.fusion_arch = FusionArch::kTransformer;
  c.caption_mode = CaptionMode::kVariable;
  CHECK(TrainConfig::FromJson(c.ToJson()).ToJson() == c.ToJson());
}

TEST_CASE("zero epochs return the initialization") {
  const auto features = Small();
  const auto config = Quick(0);
  const auto ckp = TrainFold(FoldOf("p2", {"p1"}), config, features);
  auto init = MakeHeadFor(config);
  for (auto& p : init->Params()) CHECK(ckp.state.At("param." + p.name) == *p.value);
  CHECK(ckp.loss_history.empty());
}

TEST_CASE("training is deterministic") {
  const auto features = Small();
  const auto a = TrainFold(FoldOf("p2", {"p1"}), Quick(), features);
  const auto b = TrainFold(FoldOf("p2", {"p1"}), Quick(), features);
  CHECK(EncodeTensorFile(a.ToTensorFile()) == EncodeTensorFile(b.ToTensorFile()));
  auto other = Quick();
  other.seed = 6;
  CHECK(MaxParamDiff(a.state, TrainFold(FoldOf("p2", {"p1"}), other, features).state) > 0);
}

TEST_CASE("batches are balanced and exclude the held-out person") {
  const auto features = Small(3);
  std::size_t batches = 0;
  TrainHooks hooks;
  hooks.on_batch = [&](const BatchEvent& e) {
    ++batches;
    CHECK(e.held_out_person == "p2");
    CHECK(e.speaking == 4);
    CHECK(e.not_speaking == 4);
    for (const auto& p : e.person_ids) REQUIRE(p != "p2");
  };
  const auto ckp = TrainFold(FoldOf("p2", {"p1", "p3"}), Quick(2), features, hooks);
  // 32 segments per class over two persons, 4 per class per batch.
  CHECK(batches == 2 * 8);
  CHECK(ckp.train_persons == std::vector<std::string>{"p1", "p3"});
}

TEST_CASE("resume equals one uninterrupted run") {
  const auto features = Small(2, 12, CaptionMode::kNone);
  auto config = Quick(20);
  config.caption_mode = CaptionMode::kNone;
  const auto whole = TrainFold(FoldOf("p2", {"p1"}), config, features);
  config.max_epochs = 10;
  const auto half = TrainFold(FoldOf("p2", {"p1"}), config, features);
  test::TempDir dir("resume");
  half.Save(dir / "half.vckp");
  const auto resumed = Resume(Checkpoint::Load(dir / "half.vckp"), 10, features);
  CHECK(resumed.epoch == 20);
  CHECK(MaxParamDiff(whole.state, resumed.state) <= 1e-6);
  CHECK(resumed.loss_history == whole.loss_history);
  const auto unchanged = Resume(half, 0, features);
  CHECK(MaxParamDiff(unchanged.state, half.state) == 0);
}

TEST_CASE("checkpoint reload reproduces logits and detects damage") {
  const auto features = Small();
  const auto ckp = TrainFold(FoldOf("p2", {"p1"}), Quick(), features);
  test::TempDir dir("ckpt");
  const auto path = dir / "fold.vckp";
  ckp.Save(path);
  const auto loaded = Checkpoint::Load(path);
  CHECK(loaded.arch_id == "fn_mlp/v1");
  CHECK(loaded.held_out_person == "p2");
  CHECK(loaded.config.ToJson() == ckp.config.ToJson());
  auto a = RestoreHead(ckp), b = RestoreHead(loaded);
  const auto pa = PredictPerson(*a, ckp.config, features, "p2");
  const auto pb = PredictPerson(*b, loaded.config, features, "p2");
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].logit == pb[i].logit);

  std::string bytes = ReadFile(path);
  bytes[bytes.size() / 2] ^= 0x20;
  WriteFileAtomic(path, bytes);
  CHECK(KindOf([&] { Checkpoint::Load(path); }) == ErrorKind::kCorruptCheckpoint);
  WriteFileAtomic(path, ReadFile(path).substr(0, 40));
  CHECK(KindOf([&] { Checkpoint::Load(path); }) == ErrorKind::kCorruptCheckpoint);
}

TEST_CASE("separable blobs are learned") {
  const auto features = Small(2, 40);
  auto config = Quick(50);
  config.batch_size = 16;
  const auto ckp = TrainFold(FoldOf("p2", {"p1"}), config, features);
  auto head = RestoreHead(ckp);
  CHECK(F1Score(PredictPerson(*head, config, features, "p1")) >= 0.99);
  CHECK(ckp.loss_history.back() < ckp.loss_history.front());
}

TEST_CASE("one step lowers the loss on a fixed batch") {
  const auto features = Small(1, 16);
  TrainConfig config = Quick();
  auto head = MakeHeadFor(config);
  std::vector<std::size_t> idx(features.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const std::vector<int> views(idx.size(), 0);
  const Mat x = AssembleInput(features, idx, views, config.fusion_arch, true);
  Vec y(static_cast<long>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) y[static_cast<long>(i)] = static_cast<double>(features[i].label);
  Adam adam({1e-3, 0.9, 0.999, 1e-8, 1e-4});
  head->ZeroGrad();
  const auto before = BceWithLogitsBatch(head->Forward(x, true), y);
  head->Backward(before.grad);
  auto params = head->Params();
  adam.Step(params);
  CHECK(BceWithLogitsBatch(head->Forward(x, true), y).loss < before.loss);
}

TEST_CASE("weight decay shrinks parameters under zero gradient") {
  Mat w = Mat::Constant(3, 4, 0.5), g = Mat::Zero(3, 4);
  w(1, 2) = -2;
  std::vector<ParamRef> params{{"w", &w, &g}};
  Adam adam({1e-3, 0.9, 0.999, 1e-8, 1e-4});
  double norm = w.norm();
  for (int step = 0; step < 50; ++step) {
    g.setZero();
    adam.Step(params);
    REQUIRE(w.norm() < norm);
    norm = w.norm();
  }
}

TEST_CASE("failures") {
  const auto features = Small();
  auto big = Quick();
  big.batch_size = 64;
  CHECK(KindOf([&] { TrainFold(FoldOf("p2", {"p1"}), big, features); }) ==
        ErrorKind::kInsufficientData);

  TrainHooks nan;
  nan.loss_filter = [](double loss, int epoch, int) { return epoch == 1 ? std::nan("") : loss; };
  try {
    TrainFold(FoldOf("p2", {"p1"}), Quick(), features, nan);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDivergedLoss);
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
  }
}

TEST_CASE("sweep over the learning-rate grid") {
  const auto features = Small(3);
  std::vector<TrainConfig> grid;
  for (double lr : {1e-2, 1e-3, 1e-4}) {
    auto c = Quick(2);
    c.learning_rate = lr;
    grid.push_back(c);
  }
  const FoldSpec fold = FoldOf("p3", {"p1", "p2"});
  std::set<std::string> seen;
  auto watch = [&](std::size_t) {
    TrainHooks h;
    h.on_batch = [&](const BatchEvent& e) {
      for (const auto& p : e.person_ids) seen.insert(p);
    };
    return h;
  };
  const auto rows = Sweep(grid, fold, features, watch);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) CHECK(r.ok);
  CHECK(seen.count("p3") == 0);
  CHECK(RenderSweep(rows).find("0.0001") != std::string::npos);

  const auto again = Sweep({grid[1], grid[1]}, fold, features);
  CHECK(again[0].val_f1 == again[1].val_f1);
  CHECK(again[0].train_loss == again[1].train_loss);

  auto faulty = [](std::size_t i) {
    TrainHooks h;
    if (i == 1) h.loss_filter = [](double, int, int) { return HUGE_VAL; };
    return h;
  };
  const auto mixed = Sweep(grid, fold, features, faulty);
  CHECK(mixed[0].ok);
  CHECK_FALSE(mixed[1].ok);
  CHECK(mixed[1].error.find("DivergedLoss") != std::string::npos);
  CHECK(mixed[2].ok);
}

TEST_CASE("early stopping keeps the best validation epoch") {
  const auto features = Small(2, 24);
  auto config = Quick(8);
  config.patience = 2;
  const auto ckp = TrainFold(FoldOf("p2", {"p1"}), config, features);
  REQUIRE_FALSE(ckp.val_loss_history.empty());
  const auto best = std::min_element(ckp.val_loss_history.begin(), ckp.val_loss_history.end());
  CHECK(ckp.epoch == static_cast<int>(best - ckp.val_loss_history.begin()) + 1);
  CHECK(KindOf([&] { Resume(ckp, 1, features); }) == ErrorKind::kConfigError);
}

TEST_CASE("transformer input layout") {
  const auto features = Small(1, 2);
  const std::vector<std::size_t> idx{0, 1};
  const std::vector<int> views{0, 0};
  const Mat xt = AssembleInput(features, idx, views, FusionArch::kTransformer, true);
  CHECK(xt.rows() == 40);
  CHECK(xt.cols() == 512);
  CHECK(xt.row(10) == xt.row(19));
  const Mat xm = AssembleInput(features, idx, views, FusionArch::kMlp, true);
  CHECK(xm.rows() == 2);
  CHECK(xm.cols() == 1024);
  CHECK(AssembleInput(features, idx, views, FusionArch::kMlp, false).cols() == 512);
}

}  // TEST_SUITE

}  // namespace vad
