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

#include "mnet/pc_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>

#include "mnet/error.hpp"

namespace mnet {
namespace {

enum class PlyType { kI8, kU8, kI16, kU16, kI32, kU32, kF32, kF64 };

PlyType ParseType(const std::string& name) {
  static const std::map<std::string, PlyType> kTypes = {
      {"char", PlyType::kI8},    {"int8", PlyType::kI8},     {"uchar", PlyType::kU8},
      {"uint8", PlyType::kU8},   {"short", PlyType::kI16},   {"int16", PlyType::kI16},
      {"ushort", PlyType::kU16}, {"uint16", PlyType::kU16},  {"int", PlyType::kI32},
      {"int32", PlyType::kI32},  {"uint", PlyType::kU32},    {"uint32", PlyType::kU32},
      {"float", PlyType::kF32},  {"float32", PlyType::kF32}, {"double", PlyType::kF64},
      {"float64", PlyType::kF64}};
  auto it = kTypes.find(name);
  if (it == kTypes.end()) throw Error(ErrorCode::kMalformedHeader, "unknown type " + name);
  return it->second;
}

std::size_t TypeSize(PlyType t) {
  switch (t) {
    case PlyType::kI8:
    case PlyType::kU8: return 1;
    case PlyType::kI16:
    case PlyType::kU16: return 2;
    case PlyType::kI32:
    case PlyType::kU32:
    case PlyType::kF32: return 4;
    case PlyType::kF64: return 8;
  }
  return 0;
}

double ReadBinary(const std::uint8_t* p, PlyType t) {
  std::uint64_t raw = 0;
  const std::size_t n = TypeSize(t);
  for (std::size_t i = 0; i < n; ++i) raw |= std::uint64_t{p[i]} << (8 * i);
  switch (t) {
    case PlyType::kI8: return static_cast<std::int8_t>(raw);
    case PlyType::kU8: return static_cast<std::uint8_t>(raw);
    case PlyType::kI16: return static_cast<std::int16_t>(raw);
    case PlyType::kU16: return static_cast<std::uint16_t>(raw);
    case PlyType::kI32: return static_cast<std::int32_t>(raw);
    case PlyType::kU32: return static_cast<std::uint32_t>(raw);
    case PlyType::kF32: return std::bit_cast<float>(static_cast<std::uint32_t>(raw));
    case PlyType::kF64: return std::bit_cast<double>(raw);
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kF32;
  bool is_list = false;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

std::string Trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

}  // namespace

PointCloud ReadPly(const std::filesystem::path& path, bool require_colors) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());

  std::string line;
  std::getline(in, line);
  if (Trim(line) != "ply") throw Error(ErrorCode::kMalformedHeader, "missing ply magic");
  bool ascii = false;
  bool have_format = false;
  std::vector<PlyElement> elements;
  while (true) {
    if (!std::getline(in, line)) {
      throw Error(ErrorCode::kMalformedHeader, "header not terminated");
    }
    line = Trim(line);
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "end_header") break;
    if (key == "comment" || key == "obj_info" || key.empty()) continue;
    if (key == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") {
        ascii = true;
      } else if (fmt == "binary_big_endian") {
        throw Error(ErrorCode::kUnsupportedFormat, "big-endian PLY");
      } else if (fmt != "binary_little_endian") {
        throw Error(ErrorCode::kMalformedHeader, "unknown format " + fmt);
      }
      have_format = true;
    } else if (key == "element") {
      PlyElement e;
      long long count = -1;
      ls >> e.name >> count;
      if (e.name.empty() || count < 0) {
        throw Error(ErrorCode::kMalformedHeader, "bad element line: " + line);
      }
      e.count = static_cast<std::size_t>(count);
      elements.push_back(std::move(e));
    } else if (key == "property") {
      if (elements.empty()) {
        throw Error(ErrorCode::kMalformedHeader, "property before element");
      }
      PlyProperty p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, item_type;
        ls >> count_type >> item_type;
        ParseType(count_type);
        p.type = ParseType(item_type);
        p.is_list = true;
      } else {
        p.type = ParseType(type);
      }
      ls >> p.name;
      if (p.name.empty()) throw Error(ErrorCode::kMalformedHeader, "unnamed property");
      elements.back().properties.push_back(std::move(p));
    } else {
      throw Error(ErrorCode::kMalformedHeader, "unexpected header line: " + line);
    }
  }
  if (!have_format) throw Error(ErrorCode::kMalformedHeader, "missing format line");

  auto vertex_it = std::find_if(elements.begin(), elements.end(),
                                [](const PlyElement& e) { return e.name == "vertex"; });
  if (vertex_it == elements.end()) {
    throw Error(ErrorCode::kMissingProperty, "no vertex element");
  }
  const PlyElement& vertex = *vertex_it;
  const char* wanted[6] = {"x", "y", "z", "red", "green", "blue"};
  int slot[6];
  for (int w = 0; w < 6; ++w) {
    slot[w] = -1;
    for (std::size_t p = 0; p < vertex.properties.size(); ++p) {
      if (vertex.properties[p].name == wanted[w]) slot[w] = static_cast<int>(p);
    }
    if (slot[w] < 0 && (w < 3 || require_colors)) {
      throw Error(ErrorCode::kMissingProperty, std::string("vertex property ") + wanted[w]);
    }
  }
  for (const auto& p : vertex.properties) {
    if (p.is_list) throw Error(ErrorCode::kUnsupportedFormat, "list property on vertex");
  }

  // Elements stored before the vertices must be skipped.
  for (auto it = elements.begin(); it != vertex_it; ++it) {
    if (ascii) {
      for (std::size_t i = 0; i < it->count; ++i) std::getline(in, line);
      continue;
    }
    std::size_t stride = 0;
    for (const auto& p : it->properties) {
      if (p.is_list) {
        throw Error(ErrorCode::kUnsupportedFormat, "list element before vertices");
      }
      stride += TypeSize(p.type);
    }
    in.seekg(static_cast<std::streamoff>(stride * it->count), std::ios::cur);
  }

  const bool has_colors = slot[3] >= 0 && slot[4] >= 0 && slot[5] >= 0;
  PointCloud cloud;
  cloud.has_colors = has_colors;
  cloud.positions.resize(vertex.count);
  cloud.colors.resize(vertex.count);
  std::vector<double> row(vertex.properties.size());
  if (ascii) {
    for (std::size_t i = 0; i < vertex.count; ++i) {
      for (auto& v : row) {
        if (!(in >> v)) throw Error(ErrorCode::kMalformedHeader, "truncated ascii body");
      }
      for (int a = 0; a < 3; ++a) {
        cloud.positions[i][static_cast<std::size_t>(a)] = row[static_cast<std::size_t>(slot[a])];
        if (has_colors) {
          cloud.colors[i][static_cast<std::size_t>(a)] =
              static_cast<std::int32_t>(row[static_cast<std::size_t>(slot[3 + a])]);
        }
      }
    }
  } else {
    std::vector<std::size_t> offset(vertex.properties.size());
    std::size_t stride = 0;
    for (std::size_t p = 0; p < vertex.properties.size(); ++p) {
      offset[p] = stride;
      stride += TypeSize(vertex.properties[p].type);
    }
    std::vector<std::uint8_t> body(stride * vertex.count);
    in.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(body.size()));
    if (static_cast<std::size_t>(in.gcount()) != body.size()) {
      throw Error(ErrorCode::kMalformedHeader, "truncated binary body");
    }
    for (std::size_t i = 0; i < vertex.count; ++i) {
      const std::uint8_t* base = body.data() + i * stride;
      for (int a = 0; a < 3; ++a) {
        const auto pp = static_cast<std::size_t>(slot[a]);
        cloud.positions[i][static_cast<std::size_t>(a)] =
            ReadBinary(base + offset[pp], vertex.properties[pp].type);
        if (!has_colors) continue;
        const auto pc = static_cast<std::size_t>(slot[3 + a]);
        cloud.colors[i][static_cast<std::size_t>(a)] = static_cast<std::int32_t>(
            ReadBinary(base + offset[pc], vertex.properties[pc].type));
      }
    }
  }
  return cloud;
}

void WritePly(const PointCloud& cloud, const std::filesystem::path& path, PlyFormat format) {
  if (cloud.colors.size() != cloud.positions.size()) {
    throw Error(ErrorCode::kShapeMismatch, "positions and colors differ in length");
  }
  bool integral = true;
  for (const auto& p : cloud.positions) {
    for (double v : p) {
      if (v != std::floor(v) || std::abs(v) > 2147483647.0) integral = false;
    }
  }
  for (const auto& c : cloud.colors) {
    for (auto v : c) {
      if (v < 0 || v > 255) throw Error(ErrorCode::kOutOfRange, "color outside 0..255");
    }
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    const char* pos_type = integral ? "int" : "double";
    out << "ply\nformat "
        << (format == PlyFormat::kAscii ? "ascii" : "binary_little_endian") << " 1.0\n"
        << "element vertex " << cloud.size() << "\n"
        << "property " << pos_type << " x\nproperty " << pos_type << " y\nproperty "
        << pos_type << " z\n"
        << "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
    if (format == PlyFormat::kAscii) {
      out << std::setprecision(17);
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud.positions[i];
        const auto& c = cloud.colors[i];
        if (integral) {
          out << static_cast<long long>(p[0]) << ' ' << static_cast<long long>(p[1]) << ' '
              << static_cast<long long>(p[2]);
        } else {
          out << p[0] << ' ' << p[1] << ' ' << p[2];
        }
        out << ' ' << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
      }
    } else {
      std::vector<std::uint8_t> buf;
      auto put = [&buf](std::uint64_t v, int n) {
        for (int k = 0; k < n; ++k) buf.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
      };
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (double v : cloud.positions[i]) {
          if (integral) {
            put(static_cast<std::uint32_t>(static_cast<std::int32_t>(v)), 4);
          } else {
            put(std::bit_cast<std::uint64_t>(v), 8);
          }
        }
        for (auto v : cloud.colors[i]) buf.push_back(static_cast<std::uint8_t>(v));
      }
      out.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size()));
    }
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

int InferBitDepth(const PointCloud& cloud) {
  double max_v = 0.0;
  for (const auto& p : cloud.positions) {
    for (double v : p) max_v = std::max(max_v, std::floor(v));
  }
  int depth = 1;
  while (depth < 31 && std::ldexp(1.0, depth) <= max_v) ++depth;
  return depth;
}

SparseTensor Voxelize(const PointCloud& cloud, int bit_depth) {
  const double limit = std::ldexp(1.0, bit_depth);
  struct Acc {
    std::int64_t sum[3] = {0, 0, 0};
    std::int64_t n = 0;
  };
  std::map<Coord3, Acc> voxels;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    Coord3 c;
    std::int32_t* axes[3] = {&c.x, &c.y, &c.z};
    for (std::size_t a = 0; a < 3; ++a) {
      const double v = cloud.positions[i][a];
      if (!(v >= 0.0 && v < limit)) {
        throw Error(ErrorCode::kOutOfRange,
                    "position " + std::to_string(v) + " outside [0, 2^" +
                        std::to_string(bit_depth) + ")");
      }
      *axes[a] = static_cast<std::int32_t>(std::floor(v));
    }
    Acc& acc = voxels[c];
    for (std::size_t a = 0; a < 3; ++a) acc.sum[a] += cloud.colors[i][a];
    ++acc.n;
  }
  std::vector<Coord3> coords;
  Matrix features(static_cast<Eigen::Index>(voxels.size()), 3);
  Eigen::Index row = 0;
  for (const auto& [c, acc] : voxels) {
    coords.push_back(c);
    for (int a = 0; a < 3; ++a) {
      features(row, a) =
          std::round(static_cast<double>(acc.sum[a]) / static_cast<double>(acc.n));
    }
    ++row;
  }
  return BuildSparseTensor(std::move(coords), features, 1);
}

std::vector<Block> PartitionBlocks(const SparseTensor& tensor, std::int32_t size) {
  std::map<Coord3, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < tensor.coords.size(); ++i) {
    groups[SnapToStride(tensor.coords[i], size)].push_back(i);
  }
  std::vector<Block> blocks;
  blocks.reserve(groups.size());
  for (const auto& [origin, rows] : groups) {
    std::vector<Coord3> local;
    Matrix features(static_cast<Eigen::Index>(rows.size()), tensor.features.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      local.push_back(tensor.coords[rows[r]] - origin);
      features.row(static_cast<Eigen::Index>(r)) =
          tensor.features.row(static_cast<Eigen::Index>(rows[r]));
    }
    blocks.push_back({origin, BuildSparseTensor(std::move(local), features, 1)});
  }
  return blocks;
}

void WriteBlockManifest(std::span<const Block> blocks, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& b : blocks) {
    out << b.origin.x << ' ' << b.origin.y << ' ' << b.origin.z << ' ' << b.voxels.size()
        << '\n';
  }
}

std::vector<std::int32_t> TensorColors(const SparseTensor& tensor) {
  std::vector<std::int32_t> rgb(tensor.size() * 3);
  for (std::size_t i = 0; i < tensor.size(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      rgb[3 * i + c] = static_cast<std::int32_t>(
          tensor.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
    }
  }
  return rgb;
}

}  // namespace mnet
