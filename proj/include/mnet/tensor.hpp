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

// Sparse voxel tensors with canonical lexicographic ordering, coordinate
// hashing and the multiscale coordinate pyramid.
//
// Coordinates at stride s keep their absolute grid position (a stride-4
// coordinate is always a multiple of 4), so kernel offsets at any level are
// plain multiples of the level stride.

#ifndef MNET_TENSOR_HPP_
#define MNET_TENSOR_HPP_

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace mnet {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Coord3 {
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int32_t z = 0;

  friend auto operator<=>(const Coord3&, const Coord3&) = default;
  friend bool operator==(const Coord3&, const Coord3&) = default;

  Coord3 operator+(const Coord3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Coord3 operator-(const Coord3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Coord3 operator*(std::int32_t k) const { return {x * k, y * k, z * k}; }
};

struct Coord3Hash {
  std::size_t operator()(const Coord3& c) const noexcept {
    std::uint64_t h = static_cast<std::uint32_t>(c.x);
    h = h * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint32_t>(c.y);
    h = h * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint32_t>(c.z);
    h ^= h >> 29;
    h *= 0xBF58476D1CE4E5B9ULL;
    return static_cast<std::size_t>(h ^ (h >> 32));
  }
};

// Floor division, correct for negative numerators.
constexpr std::int32_t FloorDiv(std::int32_t a, std::int32_t b) {
  std::int32_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Snaps `c` onto the grid of spacing `stride`.
constexpr Coord3 SnapToStride(const Coord3& c, std::int32_t stride) {
  return {FloorDiv(c.x, stride) * stride, FloorDiv(c.y, stride) * stride,
          FloorDiv(c.z, stride) * stride};
}

// Coordinate -> row index map. Bijective with the coordinate list it was
// built from.
class CoordIndex {
 public:
  CoordIndex() = default;
  explicit CoordIndex(std::span<const Coord3> coords);

  // Returns the row of `c`, or -1 when absent.
  std::int64_t Find(const Coord3& c) const {
    auto it = map_.find(c);
    return it == map_.end() ? -1 : it->second;
  }
  std::size_t size() const { return map_.size(); }

 private:
  std::unordered_map<Coord3, std::int64_t, Coord3Hash> map_;
};

struct SparseTensor {
  std::vector<Coord3> coords;  // strictly increasing
  Matrix features;             // coords.size() rows
  std::int32_t stride = 1;
  CoordIndex index;

  std::size_t size() const { return coords.size(); }
};

// Sorts coordinates lexicographically (permuting feature rows alongside) and
// validates uniqueness and stride alignment.
SparseTensor BuildSparseTensor(std::vector<Coord3> coords, const Matrix& features,
                               std::int32_t stride);

// Returns the sorted unique parents of `coords` on the 2*stride grid.
std::vector<Coord3> DownsampleCoords(std::span<const Coord3> coords,
                                     std::int32_t stride);

inline constexpr int kDefaultPyramidLevels = 4;

// Level 0 is the full-resolution geometry; level n has stride 2^n.
struct ScalePyramid {
  std::vector<std::vector<Coord3>> coords;
  std::vector<CoordIndex> indexes;

  int num_levels() const { return static_cast<int>(coords.size()); }
  std::int32_t stride(int level) const { return std::int32_t{1} << level; }
};

// `geometry` need not be sorted; duplicates are rejected.
ScalePyramid BuildPyramid(std::span<const Coord3> geometry,
                          int num_levels = kDefaultPyramidLevels);

}  // namespace mnet

#endif  // MNET_TENSOR_HPP_
