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

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "mnet/codec.hpp"
#include "mnet/error.hpp"
#include "oracles.hpp"

namespace mnet {
namespace {

ModelConfig SmallConfig() {
  ModelConfig cfg;
  cfg.channels = 8;
  cfg.res_blocks = 1;
  cfg.mixtures = 3;
  return cfg;
}

std::vector<std::int32_t> RandomColors(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::int32_t> rgb(3 * n);
  for (auto& v : rgb) v = static_cast<std::int32_t>(UniformIndex(rng, 256));
  return rgb;
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

TEST_SUITE("codec") {

TEST_CASE("single point round trip codes three color symbols") {
  Model m = Model::Create(SmallConfig(), 1);
  const std::vector<Coord3> pt = {{3, 9, 1}};
  const std::vector<std::int32_t> rgb = {17, 0, 255};
  CodecOptions opts;
  opts.trace_cdfs = true;
  const EncodedBlock enc = Encode(m, pt, rgb, opts);
  const ParsedStream parsed = ParseStream(enc.bytes);
  CHECK(parsed.header.level_points == std::vector<std::uint32_t>{1, 1, 1, 1});
  CHECK(parsed.chunks.size() == 4);
  CHECK(enc.stats.cdf_count == 5 + 5 + 5 + 3);
  CHECK(Decode(m, pt, enc.bytes).rgb == rgb);
}

TEST_CASE("random 16-cube blocks round trip in caller order") {
  std::mt19937_64 rng(2);
  Model m = Model::Create(SmallConfig(), 2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pts = testing::RandomPoints(rng, 1 + UniformIndex(rng, 600), 16);
    const auto rgb = RandomColors(rng, pts.size());
    const EncodedBlock enc = Encode(m, pts, rgb);
    REQUIRE(Decode(m, pts, enc.bytes).rgb == rgb);
  }
}

TEST_CASE("flat colors round trip") {
  std::mt19937_64 rng(3);
  Model m = Model::Create(SmallConfig(), 3);
  const auto pts = testing::RandomPoints(rng, 300, 16);
  const std::vector<std::int32_t> rgb(900, 200);
  CHECK(Decode(m, pts, Encode(m, pts, rgb).bytes).rgb == rgb);
}

TEST_CASE("length sits between the quantized bound and the model estimate") {
  std::mt19937_64 rng(4);
  Model m = Model::Create(SmallConfig(), 4);
  const auto pts = testing::RandomPoints(rng, 500, 16);
  const auto rgb = RandomColors(rng, pts.size());
  const EncodedBlock enc = Encode(m, pts, rgb);
  const double bits = 8.0 * static_cast<double>(enc.bytes.size());
  CHECK(bits >= enc.stats.total_ideal_bits());
  CHECK(bits <= 1.01 * enc.stats.total_estimate_bits() + 256.0 * 8.0);
  const BlockGeometry geom = BuildBlockGeometry(pts, 3);
  std::vector<Coord3> sorted = pts;
  std::vector<std::size_t> order(pts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return pts[a] < pts[b]; });
  std::vector<std::int32_t> canon(rgb.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t c = 0; c < 3; ++c) canon[3 * i + c] = rgb[3 * order[i] + c];
  const double loss = ComputeLoss(m, geom, canon, false).total.value()(0, 0);
  CHECK(loss == doctest::Approx(enc.stats.total_estimate_bits()).epsilon(1e-9));
}

TEST_CASE("wrong model is rejected before decoding") {
  std::mt19937_64 rng(5);
  Model a = Model::Create(SmallConfig(), 5);
  Model b = Model::Create(SmallConfig(), 6);
  const auto pts = testing::RandomPoints(rng, 50, 16);
  const auto bytes = Encode(a, pts, RandomColors(rng, 50)).bytes;
  CHECK(CodeOf([&] { Decode(b, pts, bytes); }) == ErrorCode::kDigestMismatch);
}

TEST_CASE("flipped payload byte fails its checksum") {
  std::mt19937_64 rng(6);
  Model m = Model::Create(SmallConfig(), 7);
  const auto pts = testing::RandomPoints(rng, 80, 16);
  auto bytes = Encode(m, pts, RandomColors(rng, 80)).bytes;
  const ParsedStream parsed = ParseStream(bytes);
  const auto offset = static_cast<std::size_t>(parsed.chunks.back().data() - bytes.data());
  bytes[offset + 2] ^= 0x40;
  CHECK(CodeOf([&] { Decode(m, pts, bytes); }) == ErrorCode::kChecksumFailure);
}

TEST_CASE("malformed containers") {
  std::mt19937_64 rng(7);
  Model m = Model::Create(SmallConfig(), 8);
  const auto pts = testing::RandomPoints(rng, 40, 16);
  const auto bytes = Encode(m, pts, RandomColors(rng, 40)).bytes;
  auto bad = bytes;
  bad[0] = 'X';
  CHECK(CodeOf([&] { ParseStream(bad); }) == ErrorCode::kMalformedHeader);
  bad = bytes;
  bad[4] = 9;
  CHECK(CodeOf([&] { ParseStream(bad); }) == ErrorCode::kUnsupportedFormat);
  const std::vector<std::uint8_t> partial(bytes.begin(), bytes.end() - 1);
  CHECK(CodeOf([&] { ParseStream(partial); }) == ErrorCode::kCorruptStream);
  auto other = testing::RandomPoints(rng, 41, 16);
  CHECK(CodeOf([&] { Decode(m, other, bytes); }) == ErrorCode::kCorruptStream);
  const std::vector<Coord3> none;
  CHECK(CodeOf([&] { Encode(m, none, std::vector<std::int32_t>{}); }) ==
        ErrorCode::kEmptyGeometry);
}

TEST_CASE("prefix through the finest latent decodes in both modes") {
  std::mt19937_64 rng(8);
  Model m = Model::Create(SmallConfig(), 9);
  const auto pts = testing::RandomPoints(rng, 400, 16);
  const auto rgb = RandomColors(rng, pts.size());
  const auto bytes = Encode(m, pts, rgb).bytes;
  const std::size_t cut = PrefixLength(bytes, 3);
  CHECK(cut < bytes.size());
  const std::span<const std::uint8_t> prefix(bytes.data(), cut);
  ScalableOptions opts;
  const DecodedBlock mean = DecodeScalable(m, pts, prefix, opts);
  CHECK(mean.rgb.size() == rgb.size());
  for (auto v : mean.rgb) CHECK((v >= 0 && v <= 255));
  opts.mode = ReconstructionMode::kSample;
  opts.seed = 42;
  const DecodedBlock s1 = DecodeScalable(m, pts, prefix, opts);
  const DecodedBlock s2 = DecodeScalable(m, pts, prefix, opts);
  CHECK(s1.rgb == s2.rgb);
  opts.seed = 43;
  CHECK(DecodeScalable(m, pts, prefix, opts).rgb != s1.rgb);
  // All chunks present: scalable decode is exact in either mode.
  opts.chunks = 4;
  CHECK(DecodeScalable(m, pts, bytes, opts).rgb == rgb);
  // Each shorter prefix still decodes.
  for (std::size_t chunks = 1; chunks <= 3; ++chunks) {
    ScalableOptions o;
    o.chunks = chunks;
    const std::span<const std::uint8_t> p(bytes.data(), PrefixLength(bytes, chunks));
    CHECK(DecodeScalable(m, pts, p, o).rgb.size() == rgb.size());
  }
}

TEST_CASE("coarsest latent chunk is uniform") {
  std::mt19937_64 rng(9);
  Model m = Model::Create(SmallConfig(), 10);
  const auto pts = testing::RandomPoints(rng, 3000, 64);
  const EncodedBlock enc = Encode(m, pts, RandomColors(rng, pts.size()));
  const ParsedStream parsed = ParseStream(enc.bytes);
  const double ideal = parsed.header.level_points[3] * 5.0 * std::log2(26.0) / 8.0;
  CHECK(static_cast<double>(parsed.chunks[0].size()) <= ideal * 1.01 + 16.0);
  CHECK(static_cast<double>(parsed.chunks[0].size()) >= ideal - 1.0);
}

TEST_CASE("encoding is deterministic and the cdf traces agree") {
  std::mt19937_64 rng(10);
  Model m = Model::Create(SmallConfig(), 11);
  const auto pts = testing::RandomPoints(rng, 250, 16);
  const auto rgb = RandomColors(rng, pts.size());
  CodecOptions opts;
  opts.trace_cdfs = true;
  const EncodedBlock a = Encode(m, pts, rgb, opts);
  const EncodedBlock b = Encode(m, pts, rgb, opts);
  CHECK(a.bytes == b.bytes);
  const DecodedBlock d = Decode(m, pts, a.bytes, opts);
  CHECK(d.stats.cdf_count == a.stats.cdf_count);
  CHECK(d.stats.cdf_hash == a.stats.cdf_hash);
}

TEST_CASE("bits per point") {
  CHECK(MeasureBpp(1250, 1000) == 10.0);
  CHECK_THROWS_AS(MeasureBpp(10, 0), Error);
}

TEST_CASE("multi-block cloud round trip") {
  std::mt19937_64 rng(11);
  Model m = Model::Create(SmallConfig(), 12);
  std::vector<Coord3> pts = testing::RandomPoints(rng, 600, 40);
  for (auto& c : pts) c = c + Coord3{-20, 5, 30};
  const auto rgb = RandomColors(rng, pts.size());
  const CloudEncodeResult enc = EncodeCloud(m, pts, rgb, 16);
  CHECK(enc.num_points == pts.size());
  CHECK(enc.num_blocks > 1);
  std::int32_t block_size = 0;
  CHECK(ReadCloudStream(enc.bytes, &block_size).size() == enc.num_blocks);
  CHECK(block_size == 16);
  CHECK(DecodeCloud(m, pts, enc.bytes) == rgb);
  CHECK(DecodeCloud(m, pts, enc.bytes, nullptr, 2) == rgb);
  ScalableOptions opts;
  opts.chunks = 3;
  CHECK(DecodeCloud(m, pts, enc.bytes, &opts).size() == rgb.size());
}

}  // TEST_SUITE

}  // namespace
}  // namespace mnet
