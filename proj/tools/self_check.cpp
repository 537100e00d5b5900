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

#include "self_check.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mnet/codec.hpp"
#include "mnet/error.hpp"
#include "mnet/likelihood.hpp"
#include "mnet/random.hpp"
#include "mnet/range_coder.hpp"

namespace mnet::tools {
namespace {

std::vector<double> RandomPmf(std::mt19937_64& rng, int n) {
  std::vector<double> p(static_cast<std::size_t>(n));
  const double skew = UniformDouble(rng, 0.0, 8.0);
  for (auto& v : p) v = std::exp(skew * UniformDouble(rng, -1.0, 1.0));
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& v : p) v /= sum;
  return p;
}

bool RangeCoderRoundTrip() {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int alphabet = 2 + static_cast<int>(UniformIndex(rng, 300));
    const auto cdf = BuildCdfTable(RandomPmf(rng, alphabet));
    const std::size_t length = UniformIndex(rng, 2000);
    std::vector<int> symbols(length);
    RangeEncoder enc;
    for (auto& s : symbols) {
      // Draw from the table itself so rare symbols stay rare.
      const auto u = static_cast<std::uint32_t>(UniformIndex(rng, 1u << kCdfPrecision));
      s = 0;
      while (cdf[static_cast<std::size_t>(s) + 1] <= u) ++s;
      enc.Encode(s, cdf);
    }
    const auto bytes = enc.Finish();
    RangeDecoder dec(bytes);
    for (int s : symbols) {
      if (dec.Decode(cdf) != s) return false;
    }
  }
  return true;
}

bool UniformRoundTrip() {
  std::mt19937_64 rng(12);
  for (int alphabet : {2, 26, 256, 1000}) {
    std::vector<std::int32_t> symbols(777);
    for (auto& s : symbols) s = static_cast<std::int32_t>(UniformIndex(rng, alphabet));
    if (DecodeUniform(EncodeUniform(symbols, alphabet), symbols.size(), alphabet) != symbols) {
      return false;
    }
  }
  return true;
}

bool PmfNormalization() {
  std::mt19937_64 rng(13);
  const SymbolGrid grids[2] = {SymbolGrid::Rgb(), SymbolGrid::Latent(QuantizerConfig{})};
  for (int trial = 0; trial < 200; ++trial) {
    ChannelMixture mix;
    const int k = 1 + static_cast<int>(UniformIndex(rng, 10));
    for (int i = 0; i < k; ++i) {
      mix.logits.push_back(UniformDouble(rng, -5.0, 5.0));
      mix.means.push_back(UniformDouble(rng, -1.5, 1.5));
      mix.log_scales.push_back(UniformDouble(rng, -9.0, 2.0));
    }
    for (const auto& grid : grids) {
      const auto pmf = MixturePmf(mix, grid);
      const double sum = std::accumulate(pmf.begin(), pmf.end(), 0.0);
      if (std::abs(sum - 1.0) > 1e-9) return false;
    }
  }
  return true;
}

struct CodecCase {
  Model model;
  std::vector<Coord3> points;
  std::vector<std::int32_t> rgb;
};

CodecCase MakeCodecCase() {
  ModelConfig cfg;
  cfg.num_scales = 2;
  cfg.channels = 8;
  cfg.res_blocks = 1;
  cfg.mixtures = 2;
  CodecCase c{Model::Create(cfg, 14), {}, {}};
  std::mt19937_64 rng(14);
  std::set<Coord3> seen;
  while (seen.size() < 300) {
    seen.insert({static_cast<std::int32_t>(UniformIndex(rng, 16)),
                 static_cast<std::int32_t>(UniformIndex(rng, 16)),
                 static_cast<std::int32_t>(UniformIndex(rng, 16))});
  }
  c.points.assign(seen.begin(), seen.end());
  for (const auto& p : c.points) {
    c.rgb.push_back(8 * p.x + static_cast<std::int32_t>(UniformIndex(rng, 8)));
    c.rgb.push_back(8 * p.y);
    c.rgb.push_back(static_cast<std::int32_t>(UniformIndex(rng, 256)));
  }
  return c;
}

bool CodecRoundTrip() {
  CodecCase c = MakeCodecCase();
  CodecOptions opts;
  opts.trace_cdfs = true;
  const EncodedBlock enc = Encode(c.model, c.points, c.rgb, opts);
  const DecodedBlock dec = Decode(c.model, c.points, enc.bytes, opts);
  return dec.rgb == c.rgb && dec.stats.cdf_hash == enc.stats.cdf_hash &&
         dec.stats.cdf_count == enc.stats.cdf_count;
}

bool CodecDeterminism() {
  CodecCase c = MakeCodecCase();
  return Encode(c.model, c.points, c.rgb).bytes == Encode(c.model, c.points, c.rgb).bytes;
}

bool CodecRateBounds() {
  CodecCase c = MakeCodecCase();
  const EncodedBlock enc = Encode(c.model, c.points, c.rgb);
  const double bits = 8.0 * static_cast<double>(enc.bytes.size());
  const double estimate = enc.stats.total_estimate_bits();
  return bits >= enc.stats.total_ideal_bits() && bits <= 1.01 * estimate + 8.0 * 256;
}

bool ScalablePrefix() {
  CodecCase c = MakeCodecCase();
  const EncodedBlock enc = Encode(c.model, c.points, c.rgb);
  const std::size_t cut = PrefixLength(enc.bytes, 2);
  const std::span<const std::uint8_t> prefix(enc.bytes.data(), cut);
  for (auto mode : {ReconstructionMode::kMean, ReconstructionMode::kSample}) {
    ScalableOptions opts;
    opts.mode = mode;
    opts.seed = 5;
    const auto a = DecodeScalable(c.model, c.points, prefix, opts).rgb;
    const auto b = DecodeScalable(c.model, c.points, prefix, opts).rgb;
    if (a.size() != c.rgb.size() || a != b) return false;
  }
  return true;
}

bool DigestGuard() {
  CodecCase c = MakeCodecCase();
  const EncodedBlock enc = Encode(c.model, c.points, c.rgb);
  Model other = Model::Create(c.model.config(), 15);
  try {
    Decode(other, c.points, enc.bytes);
  } catch (const Error& e) {
    return e.code() == ErrorCode::kDigestMismatch;
  }
  return false;
}

}  // namespace

bool RunSelfCheck(std::ostream& out, bool verbose) {
  const std::pair<const char*, std::function<bool()>> checks[] = {
      {"range coder round trip", RangeCoderRoundTrip},
      {"uniform coder round trip", UniformRoundTrip},
      {"mixture pmf normalization", PmfNormalization},
      {"codec round trip and cdf trace", CodecRoundTrip},
      {"codec determinism", CodecDeterminism},
      {"codec rate bounds", CodecRateBounds},
      {"scalable prefix decode", ScalablePrefix},
      {"model digest guard", DigestGuard},
  };
  bool all = true;
  for (const auto& [name, fn] : checks) {
    bool ok = false;
    std::string detail;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      detail = e.what();
    }
    all = all && ok;
    out << (ok ? "ok    " : "FAIL  ") << name;
    if (verbose && !detail.empty()) out << " (" << detail << ")";
    out << '\n';
  }
  return all;
}

}  // namespace mnet::tools
