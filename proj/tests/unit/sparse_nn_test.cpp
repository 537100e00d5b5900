/* Copyright 2026 The MNeT Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <memory>
#include <random>

#include "doctest.h"
#include "mnet/sparse_nn.hpp"
#include "oracles.hpp"

namespace mnet {
namespace {

using testing::MaxAbsDiff;
using testing::RandomMatrix;

std::shared_ptr<const KernelMap> SelfMap(const std::vector<Coord3>& coords, int k, int stride) {
  const CoordIndex index(coords);
  return std::make_shared<const KernelMap>(BuildKernelMap(coords, index, coords, k, stride));
}

SparseTensor RandomTensor(std::mt19937_64& rng, int edge, double density, int channels,
                          int stride = 1) {
  auto coords = testing::RandomOccupancy(rng, edge, density, stride);
  const Matrix f = RandomMatrix(rng, static_cast<Eigen::Index>(coords.size()), channels);
  return BuildSparseTensor(coords, f, stride);
}

void ZeroParams(ConvParams& p) {
  p.weight.value.setZero();
  p.bias.value.setZero();
}

TEST_SUITE("sparse_nn") {

TEST_CASE("kernel map of a single point") {
  const auto map = SelfMap({{0, 0, 0}}, 3, 1);
  CHECK(map->num_offsets() == 27);
  CHECK(map->num_pairs() == 1);
  CHECK(map->in_rows[13].size() == 1);
}

TEST_CASE("kernel map of two neighbours") {
  const std::vector<Coord3> c = {{0, 0, 0}, {1, 0, 0}};
  const auto map = SelfMap(c, 3, 1);
  CHECK(map->num_pairs() == 4);
  const auto offsets = KernelOffsets(3);
  int zero = 0, plus = 0, minus = 0;
  for (std::size_t o = 0; o < offsets.size(); ++o) {
    const auto n = static_cast<int>(map->in_rows[o].size());
    if (offsets[o] == Coord3{0, 0, 0}) zero += n;
    if (offsets[o] == Coord3{1, 0, 0}) plus += n;
    if (offsets[o] == Coord3{-1, 0, 0}) minus += n;
  }
  CHECK(zero == 2);
  CHECK(plus == 1);
  CHECK(minus == 1);
}

TEST_CASE("distant sets give an empty map") {
  const std::vector<Coord3> in = {{0, 0, 0}};
  const std::vector<Coord3> out = {{5, 5, 5}};
  const KernelMap map = BuildKernelMap(in, CoordIndex(in), out, 3, 1);
  CHECK(map.num_pairs() == 0);
}

TEST_CASE("identity kernel is exact identity") {
  std::mt19937_64 rng(1);
  const SparseTensor t = RandomTensor(rng, 8, 0.3, 4);
  ConvParams p(3, 4, 4);
  ZeroParams(p);
  p.weight.value.block(13 * 4, 0, 4, 4) = Matrix::Identity(4, 4);
  const Var y = SparseConv(Constant(t.features), p, SelfMap(t.coords, 3, 1), false);
  CHECK(y.value() == t.features);
}

TEST_CASE("isolated point sums its channels") {
  ConvParams p(3, 4, 1);
  p.weight.value.setOnes();
  p.bias.value.setZero();
  const Var y = SparseConv(Constant(Matrix::Ones(1, 4)), p, SelfMap({{3, 3, 3}}, 3, 1), false);
  CHECK(y.value()(0, 0) == 4.0);
}

TEST_CASE("sparse convolution matches the dense oracle") {
  std::mt19937_64 rng(2);
  for (int k : {2, 3}) {
    for (int stride : {1, 2}) {
      for (int trial = 0; trial < 5; ++trial) {
        const double density = trial == 0 ? 1.0 : UniformDouble(rng, 0.05, 0.6);
        const SparseTensor t = RandomTensor(rng, 8, density, 3, stride);
        ConvParams p(k, 3, 2);
        p.Initialize(rng);
        p.bias.value = RandomMatrix(rng, 1, 2);
        const Var y = SparseConv(Constant(t.features), p, SelfMap(t.coords, k, stride), false);
        const auto dense = testing::ToDense(t.coords, t.features, 8, stride);
        const Matrix oracle =
            testing::DenseConvAt(dense, t.coords, stride, p.weight.value, p.bias.value, k);
        CHECK(MaxAbsDiff(y.value(), oracle) <= 1e-12);
      }
    }
  }
}

TEST_CASE("transpose convolution broadcasts a parent to its children") {
  const std::vector<Coord3> coarse = {{0, 0, 0}};
  std::vector<Coord3> fine;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int z = 0; z < 2; ++z) fine.push_back({x, y, z});
  const auto map = std::make_shared<const KernelMap>(
      BuildTransposeKernelMap(CoordIndex(coarse), 1, fine, 1));
  ConvParams p(2, 1, 1);
  p.weight.value.setOnes();
  p.bias.value.setZero();
  const Var y = SparseConv(Constant(Matrix::Constant(1, 1, 7.0)), p, map, false);
  CHECK(y.value() == Matrix::Constant(8, 1, 7.0));
}

TEST_CASE("transpose convolution without a parent yields the bias") {
  const std::vector<Coord3> coarse = {{0, 0, 0}};
  const std::vector<Coord3> fine = {{4, 0, 0}};
  const auto map = std::make_shared<const KernelMap>(
      BuildTransposeKernelMap(CoordIndex(coarse), 1, fine, 1));
  ConvParams p(2, 1, 2);
  p.weight.value.setOnes();
  p.bias.value << 0.5, -1.5;
  const Var y = SparseConv(Constant(Matrix::Constant(1, 1, 3.0)), p, map, false);
  CHECK(y.value() == p.bias.value);
}

TEST_CASE("transpose convolution matches the dense oracle") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const SparseTensor coarse = RandomTensor(rng, 4, UniformDouble(rng, 0.1, 0.9), 3, 2);
    // Targets: random fine cells, some without an occupied parent.
    const auto targets = testing::RandomOccupancy(rng, 8, 0.4, 1);
    const auto map = std::make_shared<const KernelMap>(BuildTransposeKernelMap(
        coarse.index, static_cast<std::int64_t>(coarse.size()), targets, 1));
    ConvParams p(2, 3, 4);
    p.Initialize(rng);
    p.bias.value = RandomMatrix(rng, 1, 4);
    const Var y = SparseConv(Constant(coarse.features), p, map, false);
    const auto dense = testing::ToDense(coarse.coords, coarse.features, 4, 2);
    const Matrix oracle =
        testing::DenseTransposeConvAt(dense, targets, 1, p.weight.value, p.bias.value);
    CHECK(MaxAbsDiff(y.value(), oracle) <= 1e-12);
  }
}

TEST_CASE("max pool examples") {
  const std::vector<Coord3> fine = {{0, 0, 0}, {1, 0, 0}, {0, 1, 1}};
  const std::vector<Coord3> coarse = {{0, 0, 0}};
  Matrix f(3, 1);
  f << 1, 5, 3;
  const auto rows = ParentRows(fine, CoordIndex(coarse), 1);
  CHECK(MaxPool2(Constant(f), rows, 1).value()(0, 0) == 5.0);

  const std::vector<Coord3> one = {{3, 2, 1}};
  const std::vector<Coord3> parent = {{2, 2, 0}};
  Matrix g(1, 2);
  g << -0.25, 4.0;
  CHECK(MaxPool2(Constant(g), ParentRows(one, CoordIndex(parent), 1), 1).value() == g);
}

TEST_CASE("max pool on a dense 64 block matches the dense oracle") {
  std::mt19937_64 rng(4);
  const SparseTensor t = RandomTensor(rng, 64, 1.0, 2);
  const auto coarse = DownsampleCoords(t.coords, 1);
  const auto rows = ParentRows(t.coords, CoordIndex(coarse), 1);
  const Var y = MaxPool2(Constant(t.features), rows, static_cast<std::int64_t>(coarse.size()));
  const auto dense = testing::ToDense(t.coords, t.features, 64, 1);
  CHECK(MaxAbsDiff(y.value(), testing::DenseMaxPoolAt(dense, coarse, 2)) == 0.0);
}

TEST_CASE("sparse convolution gradients match finite differences") {
  std::mt19937_64 rng(5);
  const SparseTensor t = RandomTensor(rng, 4, 0.4, 2);
  const auto map = SelfMap(t.coords, 3, 1);
  Parameter x(t.features);
  ConvParams p(3, 2, 3);
  p.Initialize(rng);
  p.bias.value = RandomMatrix(rng, 1, 3);
  const Matrix up = RandomMatrix(rng, static_cast<Eigen::Index>(t.size()), 3);
  auto loss = [&](bool track) {
    return Sum(Mul(Tanh(SparseConv(Leaf(x, track), Leaf(p.weight, track), Leaf(p.bias, track), map)),
                   Constant(up)));
  };
  x.ZeroGrad();
  p.weight.ZeroGrad();
  p.bias.ZeroGrad();
  Backward(loss(true));
  auto f = [&] { return loss(false).value()(0, 0); };
  CHECK(testing::GradientError(x.grad, testing::NumericGradient(x, f)) <= 1e-6);
  CHECK(testing::GradientError(p.weight.grad, testing::NumericGradient(p.weight, f)) <= 1e-6);
  CHECK(testing::GradientError(p.bias.grad, testing::NumericGradient(p.bias, f)) <= 1e-6);
}

TEST_CASE("residual block with zero weights is the identity") {
  std::mt19937_64 rng(6);
  const SparseTensor t = RandomTensor(rng, 6, 0.3, 4);
  ResBlock block{ConvParams(3, 4, 4), ConvParams(3, 4, 4)};
  ZeroParams(block.conv1);
  ZeroParams(block.conv2);
  CHECK(ApplyResBlock(Constant(t.features), block, SelfMap(t.coords, 3, 1), false).value() ==
        t.features);
}

TEST_CASE("encoder with zero weights outputs its bias on the pyramid level") {
  std::mt19937_64 rng(7);
  const auto pts = testing::RandomPoints(rng, 200, 16);
  const BlockGeometry geom = BuildBlockGeometry(pts, 3);
  ScaleEncoder enc = MakeScaleEncoder(3, 8, 5, 2, true);
  for (ConvParams* p : {&enc.head, &enc.latent, &enc.forward}) ZeroParams(*p);
  for (auto& b : enc.blocks) {
    ZeroParams(b.conv1);
    ZeroParams(b.conv2);
  }
  enc.latent.bias.value = RandomMatrix(rng, 1, 5);
  const Matrix input = RandomMatrix(rng, geom.count(0), 3);
  const EncoderOutput out = RunEncoder(enc, 1, Constant(input), geom, false);
  REQUIRE(out.latent_pre.rows() == geom.count(1));
  for (Eigen::Index r = 0; r < out.latent_pre.rows(); ++r) {
    CHECK(out.latent_pre.value().row(r) == enc.latent.bias.value);
  }
  CHECK(out.forward.rows() == geom.count(1));
  CHECK(out.forward.cols() == 8);
}

TEST_CASE("single point stack degenerates to per-point maps") {
  std::mt19937_64 rng(8);
  const std::vector<Coord3> pt = {{9, 3, 12}};
  const BlockGeometry geom = BuildBlockGeometry(pt, 3);
  ScaleEncoder enc = MakeScaleEncoder(3, 64, 5, 1, true);
  for (ConvParams* p : {&enc.head, &enc.latent, &enc.forward}) p->Initialize(rng);
  const EncoderOutput out = RunEncoder(enc, 1, Constant(RandomMatrix(rng, 1, 3)), geom, false);
  CHECK(out.latent_pre.rows() == 1);
  CHECK(out.latent_pre.cols() == 5);
  CHECK(out.forward.rows() == 1);
  CHECK(out.forward.cols() == 64);

  ScaleDecoder dec = MakeScaleDecoder(5, 16, 150, 1, true);
  const DecoderOutput d = RunDecoder(dec, 3, Constant(RandomMatrix(rng, 1, 5)), Var(), geom, false);
  CHECK(d.mixture_params.rows() == geom.count(2));
  CHECK(geom.pyramid.coords[2] == std::vector<Coord3>{{8, 0, 12}});
}

TEST_CASE("decoder with zero weights outputs its bias") {
  std::mt19937_64 rng(9);
  const auto pts = testing::RandomPoints(rng, 100, 16);
  const BlockGeometry geom = BuildBlockGeometry(pts, 3);
  ScaleDecoder dec = MakeScaleDecoder(5, 8, 12, 1, true);
  for (ConvParams* p : {&dec.input, &dec.upsample, &dec.params_head, &dec.forward}) ZeroParams(*p);
  for (auto& b : dec.blocks) {
    ZeroParams(b.conv1);
    ZeroParams(b.conv2);
  }
  dec.params_head.bias.value = RandomMatrix(rng, 1, 12);
  const DecoderOutput d =
      RunDecoder(dec, 2, Constant(RandomMatrix(rng, geom.count(2), 5)), Var(), geom, false);
  REQUIRE(d.mixture_params.rows() == geom.count(1));
  for (Eigen::Index r = 0; r < d.mixture_params.rows(); ++r) {
    CHECK(d.mixture_params.value().row(r) == dec.params_head.bias.value);
  }
}

TEST_CASE("chained decoders on a 4x4x4 block reach every level-0 point") {
  std::mt19937_64 rng(10);
  std::vector<Coord3> cube;
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y)
      for (int z = 0; z < 4; ++z) cube.push_back({x, y, z});
  const BlockGeometry geom = BuildBlockGeometry(cube, 3);
  ScaleDecoder d3 = MakeScaleDecoder(5, 8, 150, 1, true);
  ScaleDecoder d2 = MakeScaleDecoder(5 + 8, 8, 150, 1, true);
  ScaleDecoder d1 = MakeScaleDecoder(5 + 8, 8, 120, 1, false);
  for (ScaleDecoder* d : {&d3, &d2, &d1}) {
    for (ConvParams* p : {&d->input, &d->upsample, &d->params_head}) p->Initialize(rng);
    if (d->has_forward) d->forward.Initialize(rng);
  }
  const DecoderOutput o3 =
      RunDecoder(d3, 3, Constant(RandomMatrix(rng, geom.count(3), 5)), Var(), geom, false);
  const DecoderOutput o2 =
      RunDecoder(d2, 2, Constant(RandomMatrix(rng, geom.count(2), 5)), o3.summary, geom, false);
  const DecoderOutput o1 =
      RunDecoder(d1, 1, Constant(RandomMatrix(rng, geom.count(1), 5)), o2.summary, geom, false);
  CHECK(o3.mixture_params.rows() == geom.count(2));
  CHECK(o2.mixture_params.rows() == geom.count(1));
  CHECK(o1.mixture_params.rows() == 64);
  CHECK(o1.mixture_params.cols() == 120);
  CHECK_FALSE(o1.summary.defined());
}

TEST_CASE("network evaluation is deterministic") {
  std::mt19937_64 rng(11);
  const auto pts = testing::RandomPoints(rng, 300, 16);
  const BlockGeometry a = BuildBlockGeometry(pts, 3);
  const BlockGeometry b = BuildBlockGeometry(pts, 3);
  ScaleEncoder enc = MakeScaleEncoder(3, 8, 5, 2, true);
  for (ConvParams* p : {&enc.head, &enc.latent, &enc.forward}) p->Initialize(rng);
  for (auto& blk : enc.blocks) {
    blk.conv1.Initialize(rng);
    blk.conv2.Initialize(rng, 0.1);
  }
  const Matrix in = RandomMatrix(rng, a.count(0), 3);
  CHECK(RunEncoder(enc, 1, Constant(in), a, false).latent_pre.value() ==
        RunEncoder(enc, 1, Constant(in), b, false).latent_pre.value());
}

}  // TEST_SUITE

}  // namespace
}  // namespace mnet
