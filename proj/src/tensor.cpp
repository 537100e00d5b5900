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

#include "mnet/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "mnet/error.hpp"

namespace mnet {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDuplicateCoordinate: return "DuplicateCoordinate";
    case ErrorCode::kStrideViolation: return "StrideViolation";
    case ErrorCode::kEmptyGeometry: return "EmptyGeometry";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonScalarLoss: return "NonScalarLoss";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kInvalidScale: return "InvalidScale";
    case ErrorCode::kSymbolOutOfRange: return "SymbolOutOfRange";
    case ErrorCode::kDegeneratePmf: return "DegeneratePmf";
    case ErrorCode::kInvalidCdf: return "InvalidCdf";
    case ErrorCode::kCorruptStream: return "CorruptStream";
    case ErrorCode::kModelMismatch: return "ModelMismatch";
    case ErrorCode::kDigestMismatch: return "DigestMismatch";
    case ErrorCode::kChecksumFailure: return "ChecksumFailure";
    case ErrorCode::kMalformedHeader: return "MalformedHeader";
    case ErrorCode::kMissingProperty: return "MissingProperty";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

CoordIndex::CoordIndex(std::span<const Coord3> coords) {
  map_.reserve(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    map_.emplace(coords[i], static_cast<std::int64_t>(i));
  }
}

static std::string Describe(const Coord3& c) {
  return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + "," +
         std::to_string(c.z) + ")";
}

SparseTensor BuildSparseTensor(std::vector<Coord3> coords, const Matrix& features,
                               std::int32_t stride) {
  if (stride <= 0 || (stride & (stride - 1)) != 0) {
    throw Error(ErrorCode::kStrideViolation,
                "stride must be a positive power of two, got " +
                    std::to_string(stride));
  }
  if (static_cast<std::size_t>(features.rows()) != coords.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "feature rows " + std::to_string(features.rows()) +
                    " != coordinate count " + std::to_string(coords.size()));
  }
  for (const auto& c : coords) {
    if (c.x % stride != 0 || c.y % stride != 0 || c.z % stride != 0) {
      throw Error(ErrorCode::kStrideViolation,
                  Describe(c) + " is not aligned to stride " +
                      std::to_string(stride));
    }
  }

  std::vector<std::size_t> order(coords.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return coords[a] < coords[b]; });

  SparseTensor out;
  out.stride = stride;
  out.coords.reserve(coords.size());
  out.features.resize(features.rows(), features.cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Coord3& c = coords[order[i]];
    if (i > 0 && out.coords.back() == c) {
      throw Error(ErrorCode::kDuplicateCoordinate, Describe(c));
    }
    out.coords.push_back(c);
    out.features.row(static_cast<Eigen::Index>(i)) =
        features.row(static_cast<Eigen::Index>(order[i]));
  }
  out.index = CoordIndex(out.coords);
  return out;
}

std::vector<Coord3> DownsampleCoords(std::span<const Coord3> coords,
                                     std::int32_t stride) {
  std::vector<Coord3> parents;
  parents.reserve(coords.size());
  for (const auto& c : coords) parents.push_back(SnapToStride(c, 2 * stride));
  std::sort(parents.begin(), parents.end());
  parents.erase(std::unique(parents.begin(), parents.end()), parents.end());
  return parents;
}

ScalePyramid BuildPyramid(std::span<const Coord3> geometry, int num_levels) {
  if (geometry.empty()) {
    throw Error(ErrorCode::kEmptyGeometry, "cannot build a pyramid of no points");
  }
  ScalePyramid pyramid;
  std::vector<Coord3> level0(geometry.begin(), geometry.end());
  std::sort(level0.begin(), level0.end());
  for (std::size_t i = 1; i < level0.size(); ++i) {
    if (level0[i] == level0[i - 1]) {
      throw Error(ErrorCode::kDuplicateCoordinate, Describe(level0[i]));
    }
  }
  pyramid.coords.push_back(std::move(level0));
  for (int n = 1; n < num_levels; ++n) {
    pyramid.coords.push_back(
        DownsampleCoords(pyramid.coords.back(), pyramid.stride(n - 1)));
  }
  for (const auto& level : pyramid.coords) pyramid.indexes.emplace_back(level);
  return pyramid;
}

}  // namespace mnet
