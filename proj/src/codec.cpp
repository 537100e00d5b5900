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

#include "mnet/codec.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <thread>

#include <zlib.h>

#include "mnet/bytes.hpp"
#include "mnet/error.hpp"
#include "mnet/likelihood.hpp"
#include "mnet/pc_io.hpp"
#include "mnet/random.hpp"
#include "mnet/range_coder.hpp"

namespace mnet {
namespace {

constexpr std::uint8_t kCloudVersion = 1;

std::uint32_t Crc32(std::span<const std::uint8_t> data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
  return static_cast<std::uint32_t>(crc);
}

// Canonical (lexicographic) order of an arbitrary geometry listing.
struct CanonicalGeometry {
  std::vector<Coord3> coords;
  std::vector<std::size_t> order;  // coords[i] == geometry[order[i]]
};

CanonicalGeometry Canonicalize(std::span<const Coord3> geometry) {
  if (geometry.empty()) throw Error(ErrorCode::kEmptyGeometry, "no points to code");
  CanonicalGeometry out;
  out.order.resize(geometry.size());
  std::iota(out.order.begin(), out.order.end(), std::size_t{0});
  std::sort(out.order.begin(), out.order.end(),
            [&](std::size_t a, std::size_t b) { return geometry[a] < geometry[b]; });
  out.coords.reserve(geometry.size());
  for (auto i : out.order) out.coords.push_back(geometry[i]);
  return out;
}

class CdfTracer {
 public:
  explicit CdfTracer(bool enabled) : enabled_(enabled) {}
  void Add(std::span<const std::uint32_t> cdf) {
    if (!enabled_) return;
    hash_ = Fnv1a64({reinterpret_cast<const std::uint8_t*>(cdf.data()),
                     cdf.size() * sizeof(std::uint32_t)},
                    hash_);
    ++count_;
  }
  void Store(CodingStats& stats) const {
    stats.cdf_hash = enabled_ ? hash_ : 0;
    stats.cdf_count = count_;
  }

 private:
  bool enabled_;
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
  std::size_t count_ = 0;
};

double SymbolBits(std::span<const std::uint32_t> cdf, int s) {
  const auto us = static_cast<std::size_t>(s);
  return -std::log2(static_cast<double>(cdf[us + 1] - cdf[us]) /
                    static_cast<double>(cdf.back()));
}

void WriteHeader(ByteWriter& w, const StreamHeader& h) {
  w.Tag("MNET");
  w.U8(h.version);
  w.U8(h.num_scales);
  for (auto n : h.level_points) w.U32(n);
  w.U64(h.model_digest);
  w.U16(h.latent_alphabet);
  w.U8(h.latent_channels);
  w.U16(h.attribute_alphabet);
  w.U8(h.attribute_channels);
}

void WriteChunk(ByteWriter& w, std::span<const std::uint8_t> payload) {
  w.U32(static_cast<std::uint32_t>(payload.size()));
  w.U32(Crc32(payload));
  w.Bytes(payload);
}

StreamHeader MakeHeader(const Model& model, const BlockGeometry& geom) {
  const auto& cfg = model.config();
  StreamHeader h;
  h.num_scales = static_cast<std::uint8_t>(cfg.num_scales);
  for (int n = 0; n < geom.num_levels(); ++n) {
    h.level_points.push_back(static_cast<std::uint32_t>(geom.count(n)));
  }
  h.model_digest = model.Digest();
  h.latent_alphabet = static_cast<std::uint16_t>(cfg.quantizer.num_bins);
  h.latent_channels = static_cast<std::uint8_t>(cfg.latent_channels);
  return h;
}

// Validates a parsed header against the model and the decode-side geometry.
void CheckHeader(const StreamHeader& h, const Model& model, const BlockGeometry* geom) {
  const auto& cfg = model.config();
  if (h.model_digest != model.Digest()) {
    throw Error(ErrorCode::kDigestMismatch, "stream was coded with a different model");
  }
  if (h.num_scales != cfg.num_scales || h.latent_alphabet != cfg.quantizer.num_bins ||
      h.latent_channels != cfg.latent_channels || h.attribute_alphabet != kRgbAlphabet ||
      h.attribute_channels != 3) {
    throw Error(ErrorCode::kModelMismatch, "stream parameters disagree with the model");
  }
  if (geom != nullptr) {
    for (int n = 0; n < geom->num_levels(); ++n) {
      if (h.level_points[static_cast<std::size_t>(n)] != geom->count(n)) {
        throw Error(ErrorCode::kCorruptStream,
                    "level " + std::to_string(n) + " point count disagrees with geometry");
      }
    }
  }
}

std::span<const double> Row(const Matrix& m, Eigen::Index i) {
  return {m.row(i).data(), static_cast<std::size_t>(m.cols())};
}

// Chunk index in stream order for latent scale n (1-based).
std::size_t LatentChunk(int num_scales, int n) {
  return static_cast<std::size_t>(num_scales - n);
}

}  // namespace

double CodingStats::total_estimate_bits() const {
  return std::accumulate(estimate_bits.begin(), estimate_bits.end(), 0.0);
}
double CodingStats::total_ideal_bits() const {
  return std::accumulate(ideal_bits.begin(), ideal_bits.end(), 0.0);
}

ParsedStream ParseStream(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, ErrorCode::kMalformedHeader);
  ParsedStream out;
  StreamHeader& h = out.header;
  if (!r.Tag("MNET")) throw Error(ErrorCode::kMalformedHeader, "bad magic");
  h.version = r.U8();
  if (h.version != kStreamVersion) {
    throw Error(ErrorCode::kUnsupportedFormat,
                "stream version " + std::to_string(h.version));
  }
  h.num_scales = r.U8();
  if (h.num_scales == 0) throw Error(ErrorCode::kMalformedHeader, "zero scales");
  for (int n = 0; n <= h.num_scales; ++n) h.level_points.push_back(r.U32());
  h.model_digest = r.U64();
  h.latent_alphabet = r.U16();
  h.latent_channels = r.U8();
  h.attribute_alphabet = r.U16();
  h.attribute_channels = r.U8();
  out.header_bytes = r.pos();

  ByteReader chunks(bytes.subspan(r.pos()), ErrorCode::kCorruptStream);
  while (chunks.remaining() > 0 && out.chunks.size() < h.num_chunks()) {
    const std::uint32_t len = chunks.U32();
    const std::uint32_t crc = chunks.U32();
    out.chunks.push_back(chunks.Bytes(len));
    out.checksums.push_back(crc);
  }
  if (chunks.remaining() > 0) {
    throw Error(ErrorCode::kCorruptStream, "trailing bytes after the last chunk");
  }
  return out;
}

std::size_t PrefixLength(std::span<const std::uint8_t> bytes, std::size_t chunks) {
  const ParsedStream parsed = ParseStream(bytes);
  std::size_t len = parsed.header_bytes;
  for (std::size_t i = 0; i < std::min(chunks, parsed.chunks.size()); ++i) {
    len += 8 + parsed.chunks[i].size();
  }
  return len;
}

EncodedBlock Encode(Model& model, std::span<const Coord3> geometry,
                    std::span<const std::int32_t> rgb, const CodecOptions& options) {
  const auto& cfg = model.config();
  const int s = cfg.num_scales;
  if (rgb.size() != 3 * geometry.size()) {
    throw Error(ErrorCode::kShapeMismatch, "need three color symbols per point");
  }
  for (auto v : rgb) {
    if (v < 0 || v >= kRgbAlphabet) {
      throw Error(ErrorCode::kSymbolOutOfRange, "color " + std::to_string(v));
    }
  }
  const CanonicalGeometry canon = Canonicalize(geometry);
  const BlockGeometry geom = BuildBlockGeometry(canon.coords, s);
  std::vector<std::int32_t> colors(rgb.size());
  for (std::size_t i = 0; i < canon.order.size(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) colors[3 * i + c] = rgb[3 * canon.order[i] + c];
  }
  const std::size_t num_chunks = static_cast<std::size_t>(s) + 1;
  EncodedBlock out;
  CodingStats& stats = out.stats;
  stats.chunk_bytes.assign(num_chunks, 0);
  stats.ideal_bits.assign(num_chunks, 0.0);
  stats.estimate_bits.assign(num_chunks, 0.0);
  CdfTracer tracer(options.trace_cdfs);

  const LatentCodes codes =
      RunEncoders(model, geom, NormalizeRgb(colors, geom.count(0)));
  const SymbolGrid latent_grid = SymbolGrid::Latent(cfg.quantizer);
  const SymbolGrid rgb_grid = SymbolGrid::Rgb();
  const int lc = cfg.latent_channels;
  const int k = cfg.mixtures;

  std::vector<std::vector<std::uint8_t>> payloads(num_chunks);
  {
    const auto& top = codes.symbols.back();
    const auto cdf = UniformCdfTable(cfg.quantizer.num_bins);
    payloads[0] = EncodeUniform(top, cfg.quantizer.num_bins);
    for (auto sym : top) {
      tracer.Add(cdf);
      stats.ideal_bits[0] += SymbolBits(cdf, sym);
    }
    stats.estimate_bits[0] =
        static_cast<double>(top.size()) * std::log2(static_cast<double>(cfg.quantizer.num_bins));
  }

  Var summary;
  for (int n = s; n >= 1; --n) {
    const auto idx = static_cast<std::size_t>(n - 1);
    DecoderOutput dec = RunDecoder(model.decoder(n), n, Constant(codes.values[idx]),
                                   summary, geom, false);
    const Matrix& params = dec.mixture_params.value();
    RangeEncoder enc;
    if (n > 1) {
      const std::size_t chunk = LatentChunk(s, n - 1);
      const auto& sym = codes.symbols[idx - 1];
      for (Eigen::Index i = 0; i < params.rows(); ++i) {
        for (int c = 0; c < lc; ++c) {
          const int v = sym[static_cast<std::size_t>(i * lc + c)];
          const ChannelMixture mix = LatentChannelMixture(Row(params, i), lc, k, c);
          const auto cdf = BuildCdfTable(MixturePmf(mix, latent_grid));
          tracer.Add(cdf);
          enc.Encode(v, cdf);
          stats.ideal_bits[chunk] += SymbolBits(cdf, v);
          stats.estimate_bits[chunk] -=
              MixtureLogProb(mix, v, latent_grid.value(v), latent_grid) / std::numbers::ln2;
        }
      }
      payloads[chunk] = enc.Finish();
    } else {
      const std::size_t chunk = num_chunks - 1;
      for (Eigen::Index i = 0; i < params.rows(); ++i) {
        double x[3] = {0.0, 0.0, 0.0};
        for (int c = 0; c < 3; ++c) {
          const int v = colors[static_cast<std::size_t>(i * 3 + c)];
          const ChannelMixture mix = RgbChannelMixture(Row(params, i), k, c, x[0], x[1]);
          const auto cdf = BuildCdfTable(MixturePmf(mix, rgb_grid));
          tracer.Add(cdf);
          enc.Encode(v, cdf);
          x[c] = rgb_grid.value(v);
          stats.ideal_bits[chunk] += SymbolBits(cdf, v);
          stats.estimate_bits[chunk] -=
              MixtureLogProb(mix, v, x[c], rgb_grid) / std::numbers::ln2;
        }
      }
      payloads[chunk] = enc.Finish();
    }
    summary = dec.summary;
  }

  ByteWriter w;
  WriteHeader(w, MakeHeader(model, geom));
  stats.header_bytes = w.size();
  for (std::size_t c = 0; c < num_chunks; ++c) {
    WriteChunk(w, payloads[c]);
    stats.chunk_bytes[c] = 8 + payloads[c].size();
  }
  tracer.Store(stats);
  out.bytes = w.Take();
  return out;
}

namespace {

// Shared decode path. `usable` chunks are decoded exactly; later levels are
// reconstructed from their distributions.
DecodedBlock DecodeImpl(Model& model, std::span<const Coord3> geometry,
                        std::span<const std::uint8_t> bytes, std::size_t usable,
                        ReconstructionMode mode, std::uint64_t seed, bool trace) {
  const auto& cfg = model.config();
  const int s = cfg.num_scales;
  const ParsedStream parsed = ParseStream(bytes);
  CheckHeader(parsed.header, model, nullptr);
  const std::size_t num_chunks = parsed.header.num_chunks();
  if (usable == 0 || usable > num_chunks) {
    throw Error(ErrorCode::kCorruptStream, "chunk count out of range");
  }
  if (parsed.chunks.size() < usable) {
    throw Error(ErrorCode::kCorruptStream,
                "stream holds " + std::to_string(parsed.chunks.size()) +
                    " chunks, need " + std::to_string(usable));
  }
  for (std::size_t c = 0; c < usable; ++c) {
    if (Crc32(parsed.chunks[c]) != parsed.checksums[c]) {
      throw Error(ErrorCode::kChecksumFailure, "chunk " + std::to_string(c));
    }
  }
  const CanonicalGeometry canon = Canonicalize(geometry);
  const BlockGeometry geom = BuildBlockGeometry(canon.coords, s);
  CheckHeader(parsed.header, model, &geom);

  DecodedBlock out;
  CodingStats& stats = out.stats;
  stats.chunk_bytes.assign(num_chunks, 0);
  stats.ideal_bits.assign(num_chunks, 0.0);
  stats.estimate_bits.assign(num_chunks, 0.0);
  stats.header_bytes = parsed.header_bytes;
  for (std::size_t c = 0; c < parsed.chunks.size(); ++c) {
    stats.chunk_bytes[c] = 8 + parsed.chunks[c].size();
  }
  CdfTracer tracer(trace);
  std::mt19937_64 rng(seed);
  auto pick = [&](const std::vector<double>& pmf, const SymbolGrid& grid) {
    return mode == ReconstructionMode::kMean ? MeanSymbol(pmf, grid)
                                             : SampleSymbol(pmf, UniformDouble(rng));
  };

  const SymbolGrid latent_grid = SymbolGrid::Latent(cfg.quantizer);
  const SymbolGrid rgb_grid = SymbolGrid::Rgb();
  const auto centers = cfg.quantizer.Centers();
  const int lc = cfg.latent_channels;
  const int k = cfg.mixtures;

  auto dequantize = [&](const std::vector<std::int32_t>& sym, Eigen::Index rows) {
    Matrix m(rows, lc);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = centers[static_cast<std::size_t>(sym[static_cast<std::size_t>(i)])];
    }
    return m;
  };

  // Coarsest latent: always chunk 0, always present.
  std::vector<std::int32_t> latent =
      DecodeUniform(parsed.chunks[0], static_cast<std::size_t>(geom.count(s) * lc),
                    cfg.quantizer.num_bins);
  {
    const auto cdf = UniformCdfTable(cfg.quantizer.num_bins);
    for (auto v : latent) {
      tracer.Add(cdf);
      stats.ideal_bits[0] += SymbolBits(cdf, v);
    }
  }
  Matrix values = dequantize(latent, geom.count(s));

  Var summary;
  std::vector<std::int32_t> colors;
  for (int n = s; n >= 1; --n) {
    DecoderOutput dec = RunDecoder(model.decoder(n), n, Constant(values), summary, geom, false);
    const Matrix& params = dec.mixture_params.value();
    const std::size_t chunk = n > 1 ? LatentChunk(s, n - 1) : num_chunks - 1;
    const bool exact = chunk < usable;
    std::optional<RangeDecoder> rd;
    if (exact) rd.emplace(parsed.chunks[chunk]);
    if (n > 1) {
      std::vector<std::int32_t> sym(static_cast<std::size_t>(params.rows() * lc));
      for (Eigen::Index i = 0; i < params.rows(); ++i) {
        for (int c = 0; c < lc; ++c) {
          const ChannelMixture mix = LatentChannelMixture(Row(params, i), lc, k, c);
          const auto pmf = MixturePmf(mix, latent_grid);
          int v;
          if (exact) {
            const auto cdf = BuildCdfTable(pmf);
            tracer.Add(cdf);
            v = rd->Decode(cdf);
            stats.ideal_bits[chunk] += SymbolBits(cdf, v);
          } else {
            v = pick(pmf, latent_grid);
          }
          sym[static_cast<std::size_t>(i * lc + c)] = v;
        }
      }
      values = dequantize(sym, params.rows());
    } else {
      colors.resize(static_cast<std::size_t>(params.rows() * 3));
      for (Eigen::Index i = 0; i < params.rows(); ++i) {
        double x[3] = {0.0, 0.0, 0.0};
        for (int c = 0; c < 3; ++c) {
          const ChannelMixture mix = RgbChannelMixture(Row(params, i), k, c, x[0], x[1]);
          const auto pmf = MixturePmf(mix, rgb_grid);
          int v;
          if (exact) {
            const auto cdf = BuildCdfTable(pmf);
            tracer.Add(cdf);
            v = rd->Decode(cdf);
            stats.ideal_bits[chunk] += SymbolBits(cdf, v);
          } else {
            v = pick(pmf, rgb_grid);
          }
          colors[static_cast<std::size_t>(i * 3 + c)] = v;
          x[c] = rgb_grid.value(v);
        }
      }
    }
    summary = dec.summary;
  }

  out.rgb.resize(colors.size());
  for (std::size_t i = 0; i < canon.order.size(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) out.rgb[3 * canon.order[i] + c] = colors[3 * i + c];
  }
  tracer.Store(stats);
  return out;
}

}  // namespace

DecodedBlock Decode(Model& model, std::span<const Coord3> geometry,
                    std::span<const std::uint8_t> bytes, const CodecOptions& options) {
  const std::size_t all = static_cast<std::size_t>(model.config().num_scales) + 1;
  return DecodeImpl(model, geometry, bytes, all, ReconstructionMode::kMean, 0,
                    options.trace_cdfs);
}

DecodedBlock DecodeScalable(Model& model, std::span<const Coord3> geometry,
                            std::span<const std::uint8_t> bytes,
                            const ScalableOptions& options) {
  std::size_t usable = options.chunks;
  if (usable == 0) {
    usable = ParseStream(bytes).chunks.size();
  }
  return DecodeImpl(model, geometry, bytes, usable, options.mode, options.seed,
                    options.trace_cdfs);
}

double MeasureBpp(std::size_t total_bytes, std::size_t num_points) {
  if (num_points == 0) throw Error(ErrorCode::kEmptyGeometry, "bpp of zero points");
  return 8.0 * static_cast<double>(total_bytes) / static_cast<double>(num_points);
}

std::vector<std::uint8_t> WriteCloudStream(std::span<const CloudBlockStream> blocks,
                                           std::int32_t block_size) {
  ByteWriter w;
  w.Tag("MNEF");
  w.U8(kCloudVersion);
  w.U32(static_cast<std::uint32_t>(block_size));
  w.U32(static_cast<std::uint32_t>(blocks.size()));
  for (const auto& b : blocks) {
    w.I32(b.origin.x);
    w.I32(b.origin.y);
    w.I32(b.origin.z);
    w.U32(static_cast<std::uint32_t>(b.bytes.size()));
    w.Bytes(b.bytes);
  }
  return w.Take();
}

std::vector<CloudBlockStream> ReadCloudStream(std::span<const std::uint8_t> bytes,
                                              std::int32_t* block_size) {
  ByteReader r(bytes, ErrorCode::kCorruptStream);
  if (!r.Tag("MNEF")) throw Error(ErrorCode::kMalformedHeader, "not an MNeT cloud stream");
  if (r.U8() != kCloudVersion) {
    throw Error(ErrorCode::kUnsupportedFormat, "unknown cloud stream version");
  }
  const auto size = static_cast<std::int32_t>(r.U32());
  if (block_size != nullptr) *block_size = size;
  const std::uint32_t count = r.U32();
  std::vector<CloudBlockStream> blocks;
  for (std::uint32_t i = 0; i < count; ++i) {
    CloudBlockStream b;
    b.origin.x = r.I32();
    b.origin.y = r.I32();
    b.origin.z = r.I32();
    const auto len = r.U32();
    const auto payload = r.Bytes(len);
    b.bytes.assign(payload.begin(), payload.end());
    blocks.push_back(std::move(b));
  }
  return blocks;
}

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <typename Fn>
void ParallelFor(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> workers;
  for (int t = 0; t < std::min<int>(threads, static_cast<int>(n)); ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

// Blocks whose local features carry the original point index.
std::vector<Block> IndexedBlocks(std::span<const Coord3> coords, std::int32_t block_size) {
  Matrix idx(static_cast<Eigen::Index>(coords.size()), 1);
  for (Eigen::Index i = 0; i < idx.rows(); ++i) idx(i, 0) = static_cast<double>(i);
  const SparseTensor t =
      BuildSparseTensor(std::vector<Coord3>(coords.begin(), coords.end()), idx, 1);
  return PartitionBlocks(t, block_size);
}

}  // namespace

CloudEncodeResult EncodeCloud(Model& model, std::span<const Coord3> coords,
                              std::span<const std::int32_t> rgb,
                              std::int32_t block_size, int threads) {
  if (rgb.size() != 3 * coords.size()) {
    throw Error(ErrorCode::kShapeMismatch, "need three color symbols per point");
  }
  const auto blocks = IndexedBlocks(coords, block_size);
  std::vector<CloudBlockStream> streams(blocks.size());
  ParallelFor(blocks.size(), threads, [&](std::size_t b) {
    const Block& block = blocks[b];
    std::vector<std::int32_t> colors(3 * block.voxels.size());
    for (std::size_t i = 0; i < block.voxels.size(); ++i) {
      const auto src = static_cast<std::size_t>(block.voxels.features(static_cast<Eigen::Index>(i), 0));
      for (std::size_t c = 0; c < 3; ++c) colors[3 * i + c] = rgb[3 * src + c];
    }
    streams[b].origin = block.origin;
    streams[b].bytes = Encode(model, block.voxels.coords, colors).bytes;
  });
  CloudEncodeResult out;
  out.bytes = WriteCloudStream(streams, block_size);
  out.num_points = coords.size();
  out.num_blocks = blocks.size();
  return out;
}

std::vector<std::int32_t> DecodeCloud(Model& model, std::span<const Coord3> coords,
                                      std::span<const std::uint8_t> bytes,
                                      const ScalableOptions* scalable, int threads) {
  std::int32_t block_size = 0;
  const auto streams = ReadCloudStream(bytes, &block_size);
  const auto blocks = IndexedBlocks(coords, block_size);
  if (blocks.size() != streams.size()) {
    throw Error(ErrorCode::kCorruptStream, "block count disagrees with geometry");
  }
  std::vector<std::int32_t> rgb(3 * coords.size());
  ParallelFor(blocks.size(), threads, [&](std::size_t b) {
    const Block& block = blocks[b];
    if (!(streams[b].origin == block.origin)) {
      throw Error(ErrorCode::kCorruptStream, "block origins disagree with geometry");
    }
    DecodedBlock dec;
    if (scalable != nullptr) {
      ScalableOptions opts = *scalable;
      // Per-block seeds keep sampling independent of thread scheduling.
      opts.seed = scalable->seed + b;
      dec = DecodeScalable(model, block.voxels.coords, streams[b].bytes, opts);
    } else {
      dec = Decode(model, block.voxels.coords, streams[b].bytes);
    }
    for (std::size_t i = 0; i < block.voxels.size(); ++i) {
      const auto dst = static_cast<std::size_t>(block.voxels.features(static_cast<Eigen::Index>(i), 0));
      for (std::size_t c = 0; c < 3; ++c) rgb[3 * dst + c] = dec.rgb[3 * i + c];
    }
  });
  return rgb;
}

}  // namespace mnet
