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

// PLY ingestion, voxelization and block partitioning.

#ifndef MNET_PC_IO_HPP_
#define MNET_PC_IO_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mnet/tensor.hpp"

namespace mnet {

struct PointCloud {
  std::vector<std::array<double, 3>> positions;
  std::vector<std::array<std::int32_t, 3>> colors;
  // False when the file had no color properties; colors are then zero.
  bool has_colors = true;

  std::size_t size() const { return positions.size(); }
};

enum class PlyFormat { kAscii, kBinaryLittleEndian };

// Reads the vertex element's x,y,z and red,green,blue properties; other
// properties and elements are skipped. Colors may be absent only when
// `require_colors` is false.
PointCloud ReadPly(const std::filesystem::path& path, bool require_colors = true);
// Integral positions are written as int, anything else as double.
void WritePly(const PointCloud& cloud, const std::filesystem::path& path,
              PlyFormat format = PlyFormat::kBinaryLittleEndian);

// Smallest bit depth whose grid holds every position.
int InferBitDepth(const PointCloud& cloud);

// Floors positions onto the integer grid and merges duplicate voxels by the
// per-channel mean color, rounded half away from zero. Features are N x 3.
SparseTensor Voxelize(const PointCloud& cloud, int bit_depth);

struct Block {
  Coord3 origin;
  SparseTensor voxels;  // block-local coordinates in [0, size)
};

// Grid-aligned cubes of edge `size`; empty blocks omitted; sorted by origin.
std::vector<Block> PartitionBlocks(const SparseTensor& tensor, std::int32_t size = 64);

// One line per block: "x y z count".
void WriteBlockManifest(std::span<const Block> blocks, const std::filesystem::path& path);

// Voxel coordinates and 0..255 colors (3 per voxel) of a voxelized tensor.
std::vector<std::int32_t> TensorColors(const SparseTensor& tensor);

}  // namespace mnet

#endif  // MNET_PC_IO_HPP_
