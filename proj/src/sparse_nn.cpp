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

#include "mnet/sparse_nn.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "mnet/error.hpp"
#include "mnet/random.hpp"

namespace mnet {

std::vector<Coord3> KernelOffsets(int kernel_size) {
  const int lo = -(kernel_size - 1) / 2;
  const int hi = kernel_size / 2;
  std::vector<Coord3> offsets;
  offsets.reserve(static_cast<std::size_t>(kernel_size * kernel_size * kernel_size));
  for (int dx = lo; dx <= hi; ++dx) {
    for (int dy = lo; dy <= hi; ++dy) {
      for (int dz = lo; dz <= hi; ++dz) offsets.push_back({dx, dy, dz});
    }
  }
  return offsets;
}

std::size_t KernelMap::num_pairs() const {
  std::size_t n = 0;
  for (const auto& rows : in_rows) n += rows.size();
  return n;
}

KernelMap BuildKernelMap(std::span<const Coord3> in_coords,
                         const CoordIndex& in_index,
                         std::span<const Coord3> out_coords, int kernel_size,
                         std::int32_t stride) {
  const auto offsets = KernelOffsets(kernel_size);
  KernelMap map;
  map.kernel_size = kernel_size;
  map.num_in = static_cast<std::int64_t>(in_coords.size());
  map.num_out = static_cast<std::int64_t>(out_coords.size());
  map.in_rows.resize(offsets.size());
  map.out_rows.resize(offsets.size());
  for (std::size_t o = 0; o < offsets.size(); ++o) {
    const Coord3 delta = offsets[o] * stride;
    for (std::size_t j = 0; j < out_coords.size(); ++j) {
      const std::int64_t i = in_index.Find(out_coords[j] + delta);
      if (i >= 0) {
        map.in_rows[o].push_back(i);
        map.out_rows[o].push_back(static_cast<std::int64_t>(j));
      }
    }
  }
  return map;
}

KernelMap BuildTransposeKernelMap(const CoordIndex& coarse_index,
                                  std::int64_t num_coarse,
                                  std::span<const Coord3> targets,
                                  std::int32_t target_stride) {
  const auto offsets = KernelOffsets(2);
  KernelMap map;
  map.kernel_size = 2;
  map.num_in = num_coarse;
  map.num_out = static_cast<std::int64_t>(targets.size());
  map.in_rows.resize(offsets.size());
  map.out_rows.resize(offsets.size());
  for (std::size_t j = 0; j < targets.size(); ++j) {
    const Coord3 parent = SnapToStride(targets[j], 2 * target_stride);
    const std::int64_t i = coarse_index.Find(parent);
    if (i < 0) continue;
    const Coord3 d = targets[j] - parent;
    const std::size_t o = static_cast<std::size_t>(
        (d.x / target_stride) * 4 + (d.y / target_stride) * 2 + d.z / target_stride);
    map.in_rows[o].push_back(i);
    map.out_rows[o].push_back(static_cast<std::int64_t>(j));
  }
  return map;
}

std::vector<std::int64_t> ParentRows(std::span<const Coord3> fine,
                                     const CoordIndex& coarse_index,
                                     std::int32_t fine_stride) {
  std::vector<std::int64_t> rows(fine.size());
  for (std::size_t i = 0; i < fine.size(); ++i) {
    rows[i] = coarse_index.Find(SnapToStride(fine[i], 2 * fine_stride));
    if (rows[i] < 0) {
      throw Error(ErrorCode::kShapeMismatch, "coordinate without a parent");
    }
  }
  return rows;
}

ConvParams::ConvParams(int kernel_size_, int in_channels_, int out_channels_)
    : kernel_size(kernel_size_),
      in_channels(in_channels_),
      out_channels(out_channels_),
      weight(Matrix::Zero(kernel_size_ * kernel_size_ * kernel_size_ * in_channels_,
                          out_channels_)),
      bias(Matrix::Zero(1, out_channels_)) {}

void ConvParams::Initialize(std::mt19937_64& rng, double gain) {
  const double fan_in = static_cast<double>(weight.value.rows());
  const double bound = gain * std::sqrt(6.0 / fan_in);
  for (Eigen::Index i = 0; i < weight.value.rows(); ++i) {
    for (Eigen::Index j = 0; j < weight.value.cols(); ++j) {
      weight.value(i, j) = UniformDouble(rng, -bound, bound);
    }
  }
  bias.value.setZero();
}

namespace {

bool IsIdentity(const std::vector<std::int64_t>& in_rows,
                const std::vector<std::int64_t>& out_rows, std::int64_t n_in,
                std::int64_t n_out) {
  if (n_in != n_out || static_cast<std::int64_t>(in_rows.size()) != n_out) return false;
  for (std::size_t i = 0; i < in_rows.size(); ++i) {
    if (in_rows[i] != static_cast<std::int64_t>(i) || out_rows[i] != in_rows[i]) {
      return false;
    }
  }
  return true;
}

Matrix GatherRowsOf(const Matrix& x, const std::vector<std::int64_t>& rows) {
  Matrix g(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    g.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
  }
  return g;
}

}  // namespace

Var SparseConv(const Var& x, const Var& weight, const Var& bias,
               std::shared_ptr<const KernelMap> map) {
  const auto n_off = static_cast<Eigen::Index>(map->num_offsets());
  const Eigen::Index cin = x.cols();
  if (x.rows() != map->num_in || weight.rows() != n_off * cin ||
      bias.rows() != 1 || bias.cols() != weight.cols()) {
    throw Error(ErrorCode::kShapeMismatch,
                "SparseConv: input " + std::to_string(x.rows()) + "x" +
                    std::to_string(cin) + ", weight " +
                    std::to_string(weight.rows()) + "x" +
                    std::to_string(weight.cols()) + ", map in " +
                    std::to_string(map->num_in));
  }
  const Eigen::Index cout = weight.cols();
  const Matrix& xv = x.value();
  const Matrix& wv = weight.value();
  Matrix out(map->num_out, cout);
  out.rowwise() = bias.value().row(0);
  for (Eigen::Index o = 0; o < n_off; ++o) {
    const auto& ir = map->in_rows[static_cast<std::size_t>(o)];
    const auto& orow = map->out_rows[static_cast<std::size_t>(o)];
    if (ir.empty()) continue;
    const auto w_o = wv.middleRows(o * cin, cin);
    if (IsIdentity(ir, orow, map->num_in, map->num_out)) {
      out.noalias() += xv * w_o;
      continue;
    }
    const Matrix y = GatherRowsOf(xv, ir) * w_o;
    for (std::size_t r = 0; r < orow.size(); ++r) {
      out.row(orow[r]) += y.row(static_cast<Eigen::Index>(r));
    }
  }
  return Var::Make(std::move(out), {x, weight, bias},
                   [map = std::move(map), cin](BackwardContext& ctx) {
    const Matrix& g = ctx.grad();
    const Matrix& xv = ctx.parent_value(0);
    const Matrix& wv = ctx.parent_value(1);
    Matrix* gx = ctx.parent_grad(0);
    Matrix* gw = ctx.parent_grad(1);
    Matrix* gb = ctx.parent_grad(2);
    if (gb) *gb += g.colwise().sum();
    for (std::size_t o = 0; o < map->num_offsets(); ++o) {
      const auto& ir = map->in_rows[o];
      const auto& orow = map->out_rows[o];
      if (ir.empty()) continue;
      const auto off = static_cast<Eigen::Index>(o) * cin;
      if (IsIdentity(ir, orow, map->num_in, map->num_out)) {
        if (gx) gx->noalias() += g * wv.middleRows(off, cin).transpose();
        if (gw) gw->middleRows(off, cin).noalias() += xv.transpose() * g;
        continue;
      }
      const Matrix go = GatherRowsOf(g, orow);
      if (gx) {
        const Matrix gi = go * wv.middleRows(off, cin).transpose();
        for (std::size_t r = 0; r < ir.size(); ++r) {
          gx->row(ir[r]) += gi.row(static_cast<Eigen::Index>(r));
        }
      }
      if (gw) {
        gw->middleRows(off, cin).noalias() += GatherRowsOf(xv, ir).transpose() * go;
      }
    }
  });
}

Var SparseConv(const Var& x, ConvParams& p, std::shared_ptr<const KernelMap> map,
               bool track) {
  return SparseConv(x, Leaf(p.weight, track), Leaf(p.bias, track), std::move(map));
}

Var MaxPool2(const Var& x, const std::vector<std::int64_t>& parent_rows,
             std::int64_t num_parents) {
  return SegmentMax(x, parent_rows, num_parents);
}

BlockGeometry BuildBlockGeometry(std::span<const Coord3> geometry, int num_scales) {
  BlockGeometry geom;
  geom.pyramid = BuildPyramid(geometry, num_scales + 1);
  const auto& pc = geom.pyramid.coords;
  const auto& pi = geom.pyramid.indexes;
  const int levels = geom.num_levels();
  geom.conv3.resize(static_cast<std::size_t>(levels));
  geom.up.resize(static_cast<std::size_t>(levels));
  geom.parents.resize(static_cast<std::size_t>(levels));
  for (int n = 0; n < levels; ++n) {
    const auto un = static_cast<std::size_t>(n);
    geom.conv3[un] = std::make_shared<const KernelMap>(
        BuildKernelMap(pc[un], pi[un], pc[un], 3, geom.pyramid.stride(n)));
    if (n >= 1) {
      geom.up[un] = std::make_shared<const KernelMap>(BuildTransposeKernelMap(
          pi[un], geom.count(n), pc[un - 1], geom.pyramid.stride(n - 1)));
      geom.parents[un] = ParentRows(pc[un - 1], pi[un], geom.pyramid.stride(n - 1));
    }
  }
  return geom;
}

Var ApplyResBlock(const Var& x, ResBlock& block,
                  const std::shared_ptr<const KernelMap>& map, bool track) {
  Var h = Relu(SparseConv(x, block.conv1, map, track));
  return Add(x, SparseConv(h, block.conv2, map, track));
}

EncoderOutput RunEncoder(ScaleEncoder& enc, int scale, const Var& input,
                         const BlockGeometry& geom, bool track) {
  const auto fine = static_cast<std::size_t>(scale - 1);
  const auto coarse = static_cast<std::size_t>(scale);
  if (scale < 1 || scale >= geom.num_levels()) {
    throw Error(ErrorCode::kShapeMismatch, "encoder scale out of range");
  }
  Var h = SparseConv(input, enc.head, geom.conv3[fine], track);
  h = MaxPool2(h, geom.parents[coarse], geom.count(scale));
  for (auto& block : enc.blocks) h = ApplyResBlock(h, block, geom.conv3[coarse], track);
  EncoderOutput out;
  out.latent_pre = SparseConv(h, enc.latent, geom.conv3[coarse], track);
  if (enc.has_forward) out.forward = SparseConv(h, enc.forward, geom.conv3[coarse], track);
  return out;
}

DecoderOutput RunDecoder(ScaleDecoder& dec, int scale, const Var& latent,
                         const Var& summary_in, const BlockGeometry& geom,
                         bool track) {
  if (scale < 1 || scale >= geom.num_levels()) {
    throw Error(ErrorCode::kShapeMismatch, "decoder scale out of range");
  }
  const auto coarse = static_cast<std::size_t>(scale);
  const auto fine = static_cast<std::size_t>(scale - 1);
  Var in = summary_in.defined() ? ConcatCols(latent, summary_in) : latent;
  Var h = SparseConv(in, dec.input, geom.conv3[coarse], track);
  for (auto& block : dec.blocks) h = ApplyResBlock(h, block, geom.conv3[coarse], track);
  h = Relu(SparseConv(h, dec.upsample, geom.up[coarse], track));
  DecoderOutput out;
  out.mixture_params = SparseConv(h, dec.params_head, geom.conv3[fine], track);
  if (dec.has_forward) out.summary = SparseConv(h, dec.forward, geom.conv3[fine], track);
  return out;
}

ScaleEncoder MakeScaleEncoder(int in_channels, int channels, int latent_channels,
                              int res_blocks, bool has_forward) {
  ScaleEncoder enc;
  enc.head = ConvParams(3, in_channels, channels);
  for (int i = 0; i < res_blocks; ++i) {
    enc.blocks.push_back({ConvParams(3, channels, channels), ConvParams(3, channels, channels)});
  }
  enc.latent = ConvParams(3, channels, latent_channels);
  enc.has_forward = has_forward;
  if (has_forward) enc.forward = ConvParams(3, channels, channels);
  return enc;
}

ScaleDecoder MakeScaleDecoder(int in_channels, int channels, int param_channels,
                              int res_blocks, bool has_forward) {
  ScaleDecoder dec;
  dec.input = ConvParams(3, in_channels, channels);
  for (int i = 0; i < res_blocks; ++i) {
    dec.blocks.push_back({ConvParams(3, channels, channels), ConvParams(3, channels, channels)});
  }
  dec.upsample = ConvParams(2, channels, channels);
  dec.params_head = ConvParams(3, channels, param_channels);
  dec.has_forward = has_forward;
  if (has_forward) dec.forward = ConvParams(3, channels, channels);
  return dec;
}

}  // namespace mnet
