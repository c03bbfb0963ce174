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
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "vad/error.hpp"
#include "vad/fusion.hpp"
#include "vad/layers.hpp"
#include "vad/random.hpp"

namespace vad {
namespace {

Mat RandomMat(Rng& rng, long rows, long cols, double scale = 1.0) {
  Mat m(rows, cols);
  for (long i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.Normal();
  return m;
}

EmbeddingMatrix RandomEmb(Rng& rng, long rows, long cols) {
  return RandomMat(rng, rows, cols).cast<float>();
}

Vec Labels(long n) {
  Vec y(n);
  for (long i = 0; i < n; ++i) y[i] = i % 2;
  return y;
}

}  // namespace

TEST_SUITE("fusion") {

TEST_CASE("transformer fusion stacks visual then text") {
  const auto fused = FuseForTransformer(EmbeddingMatrix::Ones(10, 512), EmbeddingMatrix::Zero(10, 512));
  REQUIRE(fused.rows() == 20);
  REQUIRE(fused.cols() == 512);
  CHECK(fused.topRows(10).isOnes());
  CHECK(fused.bottomRows(10).isZero());

  Rng rng(1);
  const EmbeddingMatrix visual = RandomEmb(rng, 10, 512);
  const EmbeddingMatrix text = ReplicateText(RandomEmb(rng, 512, 1).col(0));
  const auto mixed = FuseForTransformer(visual, text);
  CHECK(mixed.topRows(10) == visual);
  for (int r = 11; r < 20; ++r) CHECK(mixed.row(r) == mixed.row(10));

  EmbeddingMatrix uneven = text;
  uneven(3, 7) += 1.0f;
  for (const auto& [v, t] : {std::pair{visual, uneven}, std::pair{visual, EmbeddingMatrix(text.topRows(9))},
                             std::pair{EmbeddingMatrix(visual.leftCols(511)), text}}) {
    try {
      FuseForTransformer(v, t);
      FAIL("accepted bad input");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kShapeMismatch);
    }
  }
}

TEST_CASE("mlp fusion pools the visual rows") {
  Rng rng(2);
  const EmbeddingVector v = RandomEmb(rng, 512, 1).col(0), t = RandomEmb(rng, 512, 1).col(0);
  const auto same = FuseForMlp(ReplicateText(v), ReplicateText(t));
  REQUIRE(same.size() == 1024);
  CHECK((same.head(512) - v).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(same.tail(512) == t);
  CHECK(FuseForMlp(EmbeddingMatrix::Zero(10, 512), EmbeddingMatrix::Zero(10, 512)).isZero());

  for (int trial = 0; trial < 100; ++trial) {
    const EmbeddingMatrix visual = RandomEmb(rng, 10, 512);
    const auto fused = FuseForMlp(visual, ReplicateText(t));
    for (int d = 0; d < 512; ++d) {
      double sum = 0;
      for (int r = 0; r < 10; ++r) sum += visual(r, d);
      REQUIRE(std::abs(fused[d] - sum / 10) <= 1e-6);
    }
  }
}

TEST_CASE("self-attention") {
  Rng rng(3);
  const Mat v1 = RandomMat(rng, 1, 4);
  CHECK(SelfAttention(RandomMat(rng, 1, 4), RandomMat(rng, 1, 4), v1).output.isApprox(v1));

  Mat q = Mat::Zero(2, 2), k(2, 2);
  q(0, 0) = q(1, 0) = 1;
  k << 0, 1, 0, 2;
  const Mat v = RandomMat(rng, 2, 3);
  const auto uniform = SelfAttention(q, k, v);
  CHECK((uniform.weights.array() - 0.5).abs().maxCoeff() <= 1e-12);
  CHECK((uniform.output.row(0) - v.colwise().mean()).norm() <= 1e-12);

  for (int trial = 0; trial < 200; ++trial) {
    const long n = 1 + static_cast<long>(rng.Below(6)), c = 1 + static_cast<long>(rng.Below(5));
    const Mat qq = RandomMat(rng, n, c), kk = RandomMat(rng, n, c), vv = RandomMat(rng, n, 3);
    const auto r = SelfAttention(qq, kk, vv);
    REQUIRE((r.output - oracle::Attention(qq, kk, vv)).cwiseAbs().maxCoeff() <= 1e-12);
    const double alpha = 0.25 * (1 + trial % 7);
    CHECK((SelfAttention(qq, kk, vv * alpha).output - r.output * alpha).cwiseAbs().maxCoeff() <= 1e-12);
  }
  for (long n : {2, 16, 64}) {
    const auto r = SelfAttention(RandomMat(rng, n, 8, 3.0), RandomMat(rng, n, 8, 3.0), RandomMat(rng, n, 8));
    CHECK((r.weights.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-6);
  }
  try {
    SelfAttention(Mat::Zero(2, 3), Mat::Zero(3, 3), Mat::Zero(3, 3));
    FAIL("mismatched rows accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDimensionMismatch);
  }
}

TEST_CASE("single-head attention layer matches dense math") {
  Rng rng(4);
  MultiHeadSelfAttention attn(4, 1);
  attn.Initialize(rng);
  const Mat x = RandomMat(rng, 6, 4);  // two samples of three tokens
  const Mat out = attn.Forward(x, 3);
  for (int s = 0; s < 2; ++s) {
    const Mat xs = x.middleRows(3 * s, 3);
    auto project = [&](const Linear& l) {
      Mat y(3, 4);
      for (int i = 0; i < 3; ++i) {
        for (int o = 0; o < 4; ++o) {
          double acc = l.bias(0, o);
          for (int d = 0; d < 4; ++d) acc += xs(i, d) * l.weight(o, d);
          y(i, o) = acc;
        }
      }
      return y;
    };
    const Mat expect = oracle::Attention(project(attn.query), project(attn.key), project(attn.value));
    CHECK((out.middleRows(3 * s, 3) - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("bce with logits") {
  CHECK(BceWithLogits(0, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(BceWithLogits(0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(BceWithLogits(10, 1) == doctest::Approx(std::log1p(std::exp(-10.0))).epsilon(1e-12));
  CHECK(BceWithLogits(10, 1) == doctest::Approx(4.54e-5).epsilon(1e-3));
  CHECK(BceWithLogits(-800, 1) == doctest::Approx(800));
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double z = rng.Uniform(-50, 50);
    const double y = static_cast<double>(rng.Below(2));
    CHECK(BceWithLogits(z, y) == BceWithLogits(-z, 1 - y));
    CHECK(BceWithLogits(z, y) >= 0);
  }
  for (double bad : {std::nan(""), HUGE_VAL, -HUGE_VAL}) {
    try {
      BceWithLogits(bad, 1);
      FAIL("non-finite logit accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kNonFiniteLogit);
    }
  }
}

TEST_CASE("mlp head layout and forward") {
  auto head = MakeMlpHead(MlpDims{}, 1);
  std::vector<std::pair<long, long>> shapes;
  for (auto& p : head->Params()) {
    if (p.name.find("weight") != std::string::npos) shapes.emplace_back(p.value->cols(), p.value->rows());
  }
  REQUIRE(shapes.size() == 4);
  CHECK(shapes == std::vector<std::pair<long, long>>{{1024, 1024}, {1024, 512}, {512, 256}, {256, 1}});

  Rng rng(6);
  const Mat x = RandomMat(rng, 8, 1024);
  const Vec a = head->Forward(x, false), b = head->Forward(x, false);
  CHECK(a.size() == 8);
  CHECK(a == b);

  MlpHead blank(MlpDims{1024, {1024, 512, 256}});
  try {
    blank.Forward(x, false);
    FAIL("uninitialized head ran");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUninitializedParams);
  }
  for (auto& p : blank.Params()) p.value->setZero();
  blank.mark_initialized();
  CHECK(blank.Forward(x, false).isZero());
  CHECK(blank.Forward(x, true).isZero());
}

TEST_CASE("toy mlp matches a hand forward pass") {
  // input 2 -> dense 2 -> BN -> ReLU -> dense 1; eval-mode BN with
  // running mean 0 and variance 1 divides by sqrt(1 + eps).
  MlpHead head(MlpDims{2, {2}});
  head.Initialize(1);
  auto params = head.Params();
  for (auto& p : params) {
    if (p.name.find("gamma") != std::string::npos) p.value->setOnes();
    if (p.name.find("beta") != std::string::npos) p.value->setZero();
    if (p.name.find("bias") != std::string::npos) p.value->setZero();
  }
  for (auto& p : params) {
    if (p.name.find("weight") == std::string::npos) continue;
    if (p.value->rows() == 2) {
      *p.value << 1, 2, -1, 1;  // weight(out, in): h = [x0 + 2 x1, -x0 + x1]
    } else {
      *p.value << 3, -2;
    }
  }
  Mat x(1, 2);
  x << 1, 0.5;
  const double s = 1.0 / std::sqrt(1.0 + 1e-5);
  const double h0 = std::max(0.0, 2.0 * s), h1 = std::max(0.0, -0.5 * s);
  CHECK(head.Forward(x, false)[0] == doctest::Approx(3 * h0 - 2 * h1).epsilon(1e-12));
}

TEST_CASE("mlp gradients match finite differences") {
  Rng rng(7);
  for (std::uint64_t seed : {1, 2, 3}) {
    MlpHead head(MlpDims{6, {5, 4, 3}});
    head.Initialize(seed);
    const Mat x = RandomMat(rng, 8, 6);
    CHECK(oracle::GradientError(head, x, Labels(8)) <= 1e-4);
  }
}

TEST_CASE("transformer gradients match finite differences") {
  Rng rng(8);
  for (std::uint64_t seed : {1, 2}) {
    TransformerHead head(TransformerDims{4, 2, 6, 5, 3});
    head.Initialize(seed);
    const Mat x = RandomMat(rng, 4 * 3, 4);
    CHECK(oracle::GradientError(head, x, Labels(4)) <= 1e-4);
  }
}

TEST_CASE("transformer head layout") {
  auto head = MakeTransformerHead(TransformerDims{}, 3);
  auto* t = dynamic_cast<TransformerHead*>(head.get());
  REQUIRE(t);
  CHECK(t->attention().heads() == 2);
  long widen = 0;
  for (auto& p : head->Params()) {
    if (p.name.find("weight") != std::string::npos && p.value->rows() == 768) ++widen;
  }
  CHECK(widen == 2);
  CHECK(head->rows_per_sample() == 20);
}

TEST_CASE("identical tokens give identical attention rows") {
  Rng rng(9);
  TransformerHead head(TransformerDims{8, 2, 12, 6, 5});
  head.Initialize(4);
  Mat x(5, 8);
  const Mat row = RandomMat(rng, 1, 8);
  for (int r = 0; r < 5; ++r) x.row(r) = row;
  head.Forward(x, false);
  const Mat& out = head.last_attention_output();
  for (int r = 1; r < 5; ++r) CHECK((out.row(r) - out.row(0)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("permuting patch tokens leaves the logit unchanged") {
  Rng rng(10);
  auto head = MakeTransformerHead(TransformerDims{}, 5);
  const EmbeddingMatrix visual = RandomEmb(rng, 10, 512);
  const EmbeddingMatrix text = ReplicateText(RandomEmb(rng, 512, 1).col(0));
  const Mat base = FuseForTransformer(visual, text).cast<double>();
  const double logit = head->Forward(base, false)[0];
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> order(9);
    std::iota(order.begin(), order.end(), 1);
    rng.Shuffle(order);
    Mat permuted = base;
    for (int i = 0; i < 9; ++i) permuted.row(1 + i) = base.row(order[i]);
    CHECK(head->Forward(permuted, false)[0] == doctest::Approx(logit).epsilon(1e-9));
  }
}

TEST_CASE("eval forward is pure") {
  Rng rng(11);
  auto mlp = MakeMlpHead(MlpDims{}, 2);
  auto tf = MakeTransformerHead(TransformerDims{}, 2);
  const Mat xm = RandomMat(rng, 4, 1024), xt = RandomMat(rng, 40, 512);
  mlp->Forward(xm, true);  // moves the running statistics
  const Vec a = mlp->Forward(xm, false);
  CHECK(mlp->Forward(xm, false) == a);
  CHECK(tf->Forward(xt, false) == tf->Forward(xt, false));
}

TEST_CASE("restored head from dims") {
  auto a = MakeMlpHead(MlpDims{16, {8, 4}}, 9);
  auto b = MakeHead(a->arch_id(), a->dims());
  auto pa = a->Params(), pb = b->Params();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].name == pb[i].name);
    CHECK(pa[i].value->rows() == pb[i].value->rows());
  }
  CHECK_THROWS_AS(MakeHead("fn_unknown/v9", a->dims()), Error);
}

}  // TEST_SUITE

}  // namespace vad
