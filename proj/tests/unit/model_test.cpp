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

#include <filesystem>
#include <random>

#include "doctest.h"
#include "mnet/error.hpp"
#include "mnet/model.hpp"
#include "oracles.hpp"

namespace mnet {
namespace {

ModelConfig TinyConfig() {
  ModelConfig cfg;
  cfg.channels = 4;
  cfg.res_blocks = 1;
  cfg.mixtures = 2;
  return cfg;
}

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIo;
}

TEST_SUITE("model") {

TEST_CASE("head widths follow the mixture layout") {
  const ModelConfig cfg;
  CHECK(cfg.rgb_param_channels() == 120);
  CHECK(cfg.latent_param_channels() == 150);
  Model m = Model::Create(cfg, 0);
  CHECK(m.decoder(1).params_head.out_channels == 120);
  CHECK(m.decoder(2).params_head.out_channels == 150);
  CHECK(m.decoder(3).params_head.out_channels == 150);
  CHECK(m.encoder(1).latent.out_channels == 5);
  CHECK_FALSE(m.encoder(3).has_forward);
  CHECK_FALSE(m.decoder(1).has_forward);
  CHECK(m.decoder(3).input.in_channels == 5);
  CHECK(m.decoder(2).input.in_channels == 5 + 64);
}

TEST_CASE("creation is deterministic in the seed") {
  CHECK(Model::Create(TinyConfig(), 3).Digest() == Model::Create(TinyConfig(), 3).Digest());
  CHECK(Model::Create(TinyConfig(), 3).Digest() != Model::Create(TinyConfig(), 4).Digest());
  Model m = Model::Create(TinyConfig(), 3);
  const auto before = m.Digest();
  m.Parameters()[5]->value(0, 0) += 1e-12;
  CHECK(m.Digest() != before);
}

TEST_CASE("biases start at zero and residual tails are damped") {
  Model m = Model::Create(ModelConfig{}, 1);
  for (const Parameter* p : std::as_const(m).Parameters()) {
    if (p->value.rows() == 1) CHECK(p->value.cwiseAbs().maxCoeff() == 0.0);
  }
  const double first = m.encoder(1).blocks[0].conv1.weight.value.cwiseAbs().maxCoeff();
  const double second = m.encoder(1).blocks[0].conv2.weight.value.cwiseAbs().maxCoeff();
  CHECK(second < 0.2 * first);
}

TEST_CASE("serialization round trip is byte exact") {
  Model m = Model::Create(TinyConfig(), 9);
  m.metadata = {7, 10.5};
  const auto bytes = m.Serialize();
  const Model back = Model::Deserialize(bytes);
  CHECK(back.config() == m.config());
  CHECK(back.Digest() == m.Digest());
  CHECK(back.metadata.epoch == 7);
  CHECK(back.metadata.loss_bpp == 10.5);
  CHECK(back.Serialize() == bytes);
}

TEST_CASE("checkpoint corruption is detected") {
  const auto bytes = Model::Create(TinyConfig(), 9).Serialize();
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(CodeOf([&] { Model::Deserialize(bad_magic); }) == ErrorCode::kMalformedHeader);
  auto bad_version = bytes;
  bad_version[4] = 99;
  CHECK(CodeOf([&] { Model::Deserialize(bad_version); }) == ErrorCode::kUnsupportedFormat);
  auto flipped = bytes;
  flipped[flipped.size() - 20] ^= 0x01;
  CHECK(CodeOf([&] { Model::Deserialize(flipped); }) == ErrorCode::kDigestMismatch);
  const std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + 40);
  CHECK(CodeOf([&] { Model::Deserialize(truncated); }) == ErrorCode::kMalformedHeader);
}

TEST_CASE("save and load") {
  const auto dir = std::filesystem::temp_directory_path() / "mnet_model_test";
  std::filesystem::create_directories(dir);
  const Model m = Model::Create(TinyConfig(), 5);
  m.Save(dir / "m.ckpt");
  CHECK(Model::Load(dir / "m.ckpt").Digest() == m.Digest());
  CHECK_FALSE(std::filesystem::exists(dir / "m.ckpt.tmp"));
  CHECK(CodeOf([&] { Model::Load(dir / "missing.ckpt"); }) == ErrorCode::kIo);
  std::filesystem::remove_all(dir);
}

TEST_CASE("normalization maps colors onto [-1, 1]") {
  const std::vector<std::int32_t> rgb = {0, 255, 128};
  const Matrix n = NormalizeRgb(rgb, 1);
  CHECK(n(0, 0) == -1.0);
  CHECK(n(0, 1) == 1.0);
  CHECK(n(0, 2) == doctest::Approx(128 / 127.5 - 1.0).epsilon(1e-15));
}

TEST_CASE("loss decomposes into per-scale terms") {
  std::mt19937_64 rng(2);
  Model m = Model::Create(TinyConfig(), 2);
  const auto pts = testing::RandomPoints(rng, 120, 16);
  const BlockGeometry geom = BuildBlockGeometry(pts, 3);
  std::vector<std::int32_t> rgb(3 * 120);
  for (auto& v : rgb) v = static_cast<std::int32_t>(UniformIndex(rng, 256));
  const LossBreakdown loss = ComputeLoss(m, geom, rgb, false);
  double parts = loss.rgb_bits;
  for (double b : loss.latent_bits) parts += b;
  CHECK(loss.total.value()(0, 0) == doctest::Approx(parts).epsilon(1e-13));
  CHECK(loss.latent_bits.back() ==
        doctest::Approx(static_cast<double>(geom.count(3)) * 5 * std::log2(26.0)).epsilon(1e-13));
  const LatentCodes codes = RunEncoders(m, geom, NormalizeRgb(rgb, geom.count(0)));
  REQUIRE(codes.symbols.size() == 3);
  for (int n = 1; n <= 3; ++n) {
    CHECK(codes.values[static_cast<std::size_t>(n - 1)].rows() == geom.count(n));
  }
}

TEST_CASE("soft-quantized loss gradient matches finite differences on one group") {
  std::mt19937_64 rng(3);
  ModelConfig cfg = TinyConfig();
  cfg.num_scales = 2;
  Model m = Model::Create(cfg, 3);
  const auto pts = testing::RandomPoints(rng, 24, 8);
  const BlockGeometry geom = BuildBlockGeometry(pts, 2);
  std::vector<std::int32_t> rgb(3 * 24);
  for (auto& v : rgb) v = static_cast<std::int32_t>(UniformIndex(rng, 256));
  Parameter& w = m.encoder(2).latent.weight;
  for (Parameter* p : m.Parameters()) p->ZeroGrad();
  Backward(ComputeLoss(m, geom, rgb, true, QuantizeMode::kSoft).total);
  const Matrix numeric = testing::NumericGradient(w, [&] {
    return ComputeLoss(m, geom, rgb, false, QuantizeMode::kSoft).total.value()(0, 0);
  });
  CHECK(testing::GroupRelativeError(w.grad, numeric) <= 1e-4);
}

}  // TEST_SUITE

}  // namespace
}  // namespace mnet
