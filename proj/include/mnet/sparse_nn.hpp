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

// Generalized sparse convolution on voxel coordinate sets, stride-2 max
// pooling, transpose convolution onto known finer coordinates, and the
// per-scale encoder/decoder stacks built from them.

#ifndef MNET_SPARSE_NN_HPP_
#define MNET_SPARSE_NN_HPP_

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "mnet/autodiff.hpp"
#include "mnet/tensor.hpp"

namespace mnet {

// Offsets of a k-wide kernel, k^3 entries ordered x-major. Odd k is centred;
// even k spans [-(k-1)/2, k/2], so k=2 covers {0,1}^3.
std::vector<Coord3> KernelOffsets(int kernel_size);

struct KernelMap {
  int kernel_size = 0;
  std::int64_t num_in = 0;
  std::int64_t num_out = 0;
  // Per kernel offset: matching (input row, output row) pairs.
  std::vector<std::vector<std::int64_t>> in_rows;
  std::vector<std::vector<std::int64_t>> out_rows;

  std::size_t num_offsets() const { return in_rows.size(); }
  std::size_t num_pairs() const;
};

// Pair (i, j) at offset o iff in_coords[i] == out_coords[j] + o * stride.
KernelMap BuildKernelMap(std::span<const Coord3> in_coords,
                         const CoordIndex& in_index,
                         std::span<const Coord3> out_coords, int kernel_size,
                         std::int32_t stride);

// Transpose map for a k2s2 upsampler: coarse coordinates at stride 2s feed
// the target coordinates at stride s with target == parent + o * s.
KernelMap BuildTransposeKernelMap(const CoordIndex& coarse_index,
                                  std::int64_t num_coarse,
                                  std::span<const Coord3> targets,
                                  std::int32_t target_stride);

// For each fine coordinate, the row of its parent at stride 2s.
std::vector<std::int64_t> ParentRows(std::span<const Coord3> fine,
                                     const CoordIndex& coarse_index,
                                     std::int32_t fine_stride);

struct ConvParams {
  int kernel_size = 3;
  int in_channels = 0;
  int out_channels = 0;
  // Offset o occupies rows [o*in_channels, (o+1)*in_channels).
  Parameter weight;
  Parameter bias;  // 1 x out_channels

  ConvParams() = default;
  ConvParams(int kernel_size, int in_channels, int out_channels);

  // He-uniform weights scaled by `gain`, zero bias.
  void Initialize(std::mt19937_64& rng, double gain = 1.0);
};

// out[j] = bias + sum_o sum_{(i,j) in map[o]} x[i] * W_o
Var SparseConv(const Var& x, const Var& weight, const Var& bias,
               std::shared_ptr<const KernelMap> map);
Var SparseConv(const Var& x, ConvParams& p, std::shared_ptr<const KernelMap> map,
               bool track);

// Channelwise max over children; `parent_rows` from ParentRows.
Var MaxPool2(const Var& x, const std::vector<std::int64_t>& parent_rows,
             std::int64_t num_parents);

// Coordinates and kernel maps of one block, derived from geometry alone.
struct BlockGeometry {
  ScalePyramid pyramid;
  // conv3[n]: k3 map on level n.
  std::vector<std::shared_ptr<const KernelMap>> conv3;
  // up[n]: level n -> level n-1 transpose map (n >= 1; up[0] unused).
  std::vector<std::shared_ptr<const KernelMap>> up;
  // parents[n]: level n-1 row -> level n row (n >= 1; parents[0] unused).
  std::vector<std::vector<std::int64_t>> parents;

  int num_levels() const { return pyramid.num_levels(); }
  std::int64_t count(int level) const {
    return static_cast<std::int64_t>(pyramid.coords[static_cast<std::size_t>(level)].size());
  }
};

BlockGeometry BuildBlockGeometry(std::span<const Coord3> geometry, int num_scales);

struct ResBlock {
  ConvParams conv1;
  ConvParams conv2;
};

Var ApplyResBlock(const Var& x, ResBlock& block,
                  const std::shared_ptr<const KernelMap>& map, bool track);

struct ScaleEncoder {
  ConvParams head;  // k3, at the finer level
  std::vector<ResBlock> blocks;
  ConvParams latent;  // k3 -> latent channels
  ConvParams forward;  // k3 -> channels; absent on the coarsest scale
  bool has_forward = true;
};

struct EncoderOutput {
  Var latent_pre;  // level n, latent channels
  Var forward;     // level n, channels; undefined on the coarsest scale
};

// Scale n consumes features on level n-1 and produces outputs on level n.
EncoderOutput RunEncoder(ScaleEncoder& enc, int scale, const Var& input,
                         const BlockGeometry& geom, bool track);

struct ScaleDecoder {
  ConvParams input;  // k3, latent (+ summary) channels -> channels
  std::vector<ResBlock> blocks;
  ConvParams upsample;  // k2 transpose
  ConvParams params_head;  // k3 -> mixture parameters
  ConvParams forward;  // k3 -> summary feature; absent on scale 1
  bool has_forward = true;
};

struct DecoderOutput {
  Var mixture_params;  // level n-1
  Var summary;         // level n-1; undefined on scale 1
};

// `summary_in` is the coarser decoder's summary on level n, undefined for the
// coarsest scale.
DecoderOutput RunDecoder(ScaleDecoder& dec, int scale, const Var& latent,
                         const Var& summary_in, const BlockGeometry& geom,
                         bool track);

ScaleEncoder MakeScaleEncoder(int in_channels, int channels, int latent_channels,
                              int res_blocks, bool has_forward);
ScaleDecoder MakeScaleDecoder(int in_channels, int channels, int param_channels,
                              int res_blocks, bool has_forward);

}  // namespace mnet

#endif  // MNET_SPARSE_NN_HPP_
