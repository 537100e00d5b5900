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

// Multiscale attribute codec.
//
// Block stream layout (little endian):
//   "MNET" | u8 version | u8 num_scales S | u32 points per level (S+1)
//   | u64 model digest | u16 latent alphabet | u8 latent channels
//   | u16 attribute alphabet | u8 attribute channels
//   then S+1 chunks, coarsest latent first and colors last:
//   L^S (uniform), L^(S-1), ..., L^1, F; each chunk is
//   u32 payload length | u32 CRC-32 | payload.
//
// Geometry is not coded; both ends must supply the same voxel set. Any
// prefix ending on a chunk boundary decodes in scalable mode.

#ifndef MNET_CODEC_HPP_
#define MNET_CODEC_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "mnet/model.hpp"
#include "mnet/tensor.hpp"

namespace mnet {

inline constexpr std::uint8_t kStreamVersion = 1;
inline constexpr int kRgbAlphabet = 256;

struct StreamHeader {
  std::uint8_t version = kStreamVersion;
  std::uint8_t num_scales = 0;
  std::vector<std::uint32_t> level_points;
  std::uint64_t model_digest = 0;
  std::uint16_t latent_alphabet = 0;
  std::uint8_t latent_channels = 0;
  std::uint16_t attribute_alphabet = kRgbAlphabet;
  std::uint8_t attribute_channels = 3;

  std::size_t num_chunks() const { return static_cast<std::size_t>(num_scales) + 1; }
};

struct ParsedStream {
  StreamHeader header;
  std::size_t header_bytes = 0;
  // Complete chunks present, in stream order; payload spans into the input.
  std::vector<std::span<const std::uint8_t>> chunks;
  std::vector<std::uint32_t> checksums;
};

// Reads the header and every complete chunk. A trailing partial chunk is a
// CorruptStream error.
ParsedStream ParseStream(std::span<const std::uint8_t> bytes);
// Byte length of the header plus the first `chunks` chunks.
std::size_t PrefixLength(std::span<const std::uint8_t> bytes, std::size_t chunks);

struct CodingStats {
  // Per chunk in stream order.
  std::vector<std::size_t> chunk_bytes;
  // Sum of -log2(freq / 2^16) over coded symbols, per chunk.
  std::vector<double> ideal_bits;
  // Model cross-entropy in bits (unquantized probabilities), per chunk.
  std::vector<double> estimate_bits;
  std::size_t header_bytes = 0;
  // Chained FNV-1a of every CDF table used, when tracing.
  std::uint64_t cdf_hash = 0;
  std::size_t cdf_count = 0;

  double total_estimate_bits() const;
  double total_ideal_bits() const;
};

struct CodecOptions {
  bool trace_cdfs = false;
};

struct EncodedBlock {
  std::vector<std::uint8_t> bytes;
  CodingStats stats;
};

// `rgb` holds 3 symbols (0..255) per geometry point in the order given.
EncodedBlock Encode(Model& model, std::span<const Coord3> geometry,
                    std::span<const std::int32_t> rgb, const CodecOptions& options = {});

struct DecodedBlock {
  std::vector<std::int32_t> rgb;  // 3 per point, in the caller's geometry order
  CodingStats stats;
};

DecodedBlock Decode(Model& model, std::span<const Coord3> geometry,
                    std::span<const std::uint8_t> bytes,
                    const CodecOptions& options = {});

enum class ReconstructionMode { kMean, kSample };

struct ScalableOptions {
  ReconstructionMode mode = ReconstructionMode::kMean;
  std::uint64_t seed = 0;
  // Chunks to consume (1..S+1); 0 uses every complete chunk present.
  std::size_t chunks = 0;
  bool trace_cdfs = false;
};

// Decodes the available latent chunks exactly and fills every missing level
// (latents and colors) from the predicted distributions.
DecodedBlock DecodeScalable(Model& model, std::span<const Coord3> geometry,
                            std::span<const std::uint8_t> bytes,
                            const ScalableOptions& options);

double MeasureBpp(std::size_t total_bytes, std::size_t num_points);

// ---- multi-block files ----
//   "MNEF" | u8 version | u32 block edge | u32 block count
//   then per block: i32 origin x,y,z | u32 stream length | block stream

struct CloudBlockStream {
  Coord3 origin;
  std::vector<std::uint8_t> bytes;
};

std::vector<std::uint8_t> WriteCloudStream(std::span<const CloudBlockStream> blocks,
                                           std::int32_t block_size);
std::vector<CloudBlockStream> ReadCloudStream(std::span<const std::uint8_t> bytes,
                                              std::int32_t* block_size = nullptr);

struct CloudEncodeResult {
  std::vector<std::uint8_t> bytes;
  std::size_t num_points = 0;
  std::size_t num_blocks = 0;
};

// Partitions the voxels into grid-aligned blocks and codes each with
// block-local coordinates. `rgb` holds 3 symbols per coordinate.
CloudEncodeResult EncodeCloud(Model& model, std::span<const Coord3> coords,
                              std::span<const std::int32_t> rgb,
                              std::int32_t block_size = 64, int threads = 1);

// Returns 3 symbols per coordinate in the order given. With `scalable`
// set, each block is decoded via DecodeScalable.
std::vector<std::int32_t> DecodeCloud(Model& model, std::span<const Coord3> coords,
                                      std::span<const std::uint8_t> bytes,
                                      const ScalableOptions* scalable = nullptr,
                                      int threads = 1);

}  // namespace mnet

#endif  // MNET_CODEC_HPP_
