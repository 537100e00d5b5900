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

#include "mnet/model.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "mnet/bytes.hpp"
#include "mnet/error.hpp"

namespace mnet {
namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

template <typename Fn>
void ForEachConv(ScaleEncoder& e, Fn&& fn) {
  fn(e.head, 1.0);
  for (auto& b : e.blocks) {
    fn(b.conv1, 1.0);
    fn(b.conv2, 0.1);
  }
  fn(e.latent, 1.0);
  if (e.has_forward) fn(e.forward, 1.0);
}

template <typename Fn>
void ForEachConv(ScaleDecoder& d, Fn&& fn) {
  fn(d.input, 1.0);
  for (auto& b : d.blocks) {
    fn(b.conv1, 1.0);
    fn(b.conv2, 0.1);
  }
  fn(d.upsample, 1.0);
  fn(d.params_head, 1.0);
  if (d.has_forward) fn(d.forward, 1.0);
}

void WriteConfig(ByteWriter& w, const ModelConfig& c) {
  w.U32(static_cast<std::uint32_t>(c.num_scales));
  w.U32(static_cast<std::uint32_t>(c.channels));
  w.U32(static_cast<std::uint32_t>(c.latent_channels));
  w.U32(static_cast<std::uint32_t>(c.res_blocks));
  w.U32(static_cast<std::uint32_t>(c.mixtures));
  w.U32(static_cast<std::uint32_t>(c.quantizer.num_bins));
  w.F64(c.quantizer.temperature);
  const auto centers = c.quantizer.Centers();
  w.U32(static_cast<std::uint32_t>(centers.size()));
  for (double x : centers) w.F64(x);
}

void WriteWeights(ByteWriter& w, const std::vector<const Parameter*>& params) {
  w.U32(static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    w.U32(static_cast<std::uint32_t>(p->value.rows()));
    w.U32(static_cast<std::uint32_t>(p->value.cols()));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) w.F64(p->value.data()[i]);
  }
}

}  // namespace

Model::Model(const ModelConfig& config) : config_(config) {
  if (config.num_scales < 1 || config.channels < 1 || config.latent_channels < 1 ||
      config.res_blocks < 0 || config.mixtures < 1 || config.quantizer.num_bins < 2) {
    throw Error(ErrorCode::kModelMismatch, "invalid model configuration");
  }
  const int s = config.num_scales;
  for (int n = 1; n <= s; ++n) {
    encoders_.push_back(MakeScaleEncoder(n == 1 ? 3 : config.channels, config.channels,
                                         config.latent_channels, config.res_blocks,
                                         n < s));
    decoders_.push_back(MakeScaleDecoder(
        config.latent_channels + (n < s ? config.channels : 0), config.channels,
        n == 1 ? config.rgb_param_channels() : config.latent_param_channels(),
        config.res_blocks, n > 1));
  }
}

Model Model::Create(const ModelConfig& config, std::uint64_t seed) {
  Model model(config);
  std::mt19937_64 rng(seed);
  auto init = [&rng](ConvParams& c, double gain) { c.Initialize(rng, gain); };
  for (auto& e : model.encoders_) ForEachConv(e, init);
  for (auto it = model.decoders_.rbegin(); it != model.decoders_.rend(); ++it) {
    ForEachConv(*it, init);
  }
  return model;
}

std::vector<Parameter*> Model::Parameters() {
  std::vector<Parameter*> out;
  auto collect = [&out](ConvParams& c, double) {
    out.push_back(&c.weight);
    out.push_back(&c.bias);
  };
  for (auto& e : encoders_) ForEachConv(e, collect);
  for (auto it = decoders_.rbegin(); it != decoders_.rend(); ++it) ForEachConv(*it, collect);
  return out;
}

std::vector<const Parameter*> Model::Parameters() const {
  auto mutable_params = const_cast<Model*>(this)->Parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

std::size_t Model::NumWeights() const {
  std::size_t n = 0;
  for (const Parameter* p : Parameters()) n += static_cast<std::size_t>(p->size());
  return n;
}

std::uint64_t Model::Digest() const {
  ByteWriter w;
  WriteConfig(w, config_);
  WriteWeights(w, Parameters());
  return Fnv1a64(w.buffer());
}

std::vector<std::uint8_t> Model::Serialize() const {
  ByteWriter w;
  w.Tag("MNCK");
  w.U32(kCheckpointVersion);
  w.U32(metadata.epoch);
  w.F64(metadata.loss_bpp);
  ByteWriter body;
  WriteConfig(body, config_);
  WriteWeights(body, Parameters());
  const std::uint64_t digest = Fnv1a64(body.buffer());
  w.Bytes(body.buffer());
  w.U64(digest);
  return w.Take();
}

Model Model::Deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, ErrorCode::kMalformedHeader);
  if (!r.Tag("MNCK")) throw Error(ErrorCode::kMalformedHeader, "not a checkpoint");
  if (r.U32() != kCheckpointVersion) {
    throw Error(ErrorCode::kUnsupportedFormat, "unknown checkpoint version");
  }
  TrainingMetadata meta;
  meta.epoch = r.U32();
  meta.loss_bpp = r.F64();
  const std::size_t body_start = r.pos();

  ModelConfig config;
  config.num_scales = static_cast<int>(r.U32());
  config.channels = static_cast<int>(r.U32());
  config.latent_channels = static_cast<int>(r.U32());
  config.res_blocks = static_cast<int>(r.U32());
  config.mixtures = static_cast<int>(r.U32());
  config.quantizer.num_bins = static_cast<int>(r.U32());
  config.quantizer.temperature = r.F64();
  if (config.num_scales < 1 || config.num_scales > 16 || config.channels < 1 ||
      config.channels > 4096 || config.latent_channels < 1 || config.latent_channels > 255 ||
      config.res_blocks < 0 || config.res_blocks > 256 || config.mixtures < 1 ||
      config.mixtures > 256 || config.quantizer.num_bins < 2 ||
      config.quantizer.num_bins > 65535 || !(config.quantizer.temperature > 0.0)) {
    throw Error(ErrorCode::kMalformedHeader, "checkpoint configuration out of range");
  }
  const auto expected_centers = config.quantizer.Centers();
  if (r.U32() != expected_centers.size()) {
    throw Error(ErrorCode::kModelMismatch, "center table size disagrees with bins");
  }
  for (double c : expected_centers) {
    if (r.F64() != c) throw Error(ErrorCode::kModelMismatch, "center table differs");
  }
  Model model(config);
  model.metadata = meta;
  auto params = model.Parameters();
  if (r.U32() != params.size()) {
    throw Error(ErrorCode::kModelMismatch, "tensor count disagrees with config");
  }
  for (Parameter* p : params) {
    const auto rows = static_cast<Eigen::Index>(r.U32());
    const auto cols = static_cast<Eigen::Index>(r.U32());
    if (rows != p->value.rows() || cols != p->value.cols()) {
      throw Error(ErrorCode::kModelMismatch, "tensor shape disagrees with config");
    }
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = r.F64();
  }
  const std::size_t body_end = r.pos();
  const std::uint64_t stored = r.U64();
  if (Fnv1a64(bytes.subspan(body_start, body_end - body_start)) != stored) {
    throw Error(ErrorCode::kDigestMismatch, "checkpoint content digest mismatch");
  }
  return model;
}

void Model::Save(const std::filesystem::path& path) const {
  const auto bytes = Serialize();
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Model Model::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return Deserialize(bytes);
}

Matrix NormalizeRgb(std::span<const std::int32_t> rgb, Eigen::Index rows) {
  Matrix out(rows, 3);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out.data()[i] = rgb[static_cast<std::size_t>(i)] / 127.5 - 1.0;
  }
  return out;
}

LatentCodes RunEncoders(Model& model, const BlockGeometry& geom,
                        const Matrix& normalized_rgb) {
  const auto& cfg = model.config();
  LatentCodes codes;
  Var input = Constant(normalized_rgb);
  for (int n = 1; n <= cfg.num_scales; ++n) {
    EncoderOutput enc = RunEncoder(model.encoder(n), n, input, geom, false);
    HardQuantized q = QuantizeHard(enc.latent_pre.value(), cfg.quantizer);
    codes.symbols.push_back(std::move(q.symbols));
    codes.values.push_back(std::move(q.values));
    input = enc.forward;
  }
  return codes;
}

LossBreakdown ComputeLoss(Model& model, const BlockGeometry& geom,
                          std::span<const std::int32_t> rgb, bool track,
                          QuantizeMode mode) {
  const auto& cfg = model.config();
  const int s = cfg.num_scales;
  if (geom.num_levels() != s + 1) {
    throw Error(ErrorCode::kModelMismatch, "geometry levels disagree with model scales");
  }
  const SymbolGrid grid = SymbolGrid::Latent(cfg.quantizer);

  std::vector<Var> values;
  std::vector<std::vector<std::int32_t>> symbols;
  Var input = Constant(NormalizeRgb(rgb, geom.count(0)));
  for (int n = 1; n <= s; ++n) {
    EncoderOutput enc = RunEncoder(model.encoder(n), n, input, geom, track);
    symbols.push_back(QuantizeHard(enc.latent_pre.value(), cfg.quantizer).symbols);
    values.push_back(QuantizeSoft(enc.latent_pre, cfg.quantizer, mode));
    input = enc.forward;
  }

  LossBreakdown out;
  out.latent_bits.assign(static_cast<std::size_t>(s), 0.0);
  Var summary;
  Var total;
  for (int n = s; n >= 1; --n) {
    const auto idx = static_cast<std::size_t>(n - 1);
    DecoderOutput dec = RunDecoder(model.decoder(n), n, values[idx], summary, geom, track);
    Var bits;
    if (n > 1) {
      bits = LatentNllBits(dec.mixture_params, values[idx - 1], symbols[idx - 1],
                           cfg.latent_channels, cfg.mixtures, grid);
      out.latent_bits[idx - 1] = bits.value()(0, 0);
    } else {
      bits = RgbNllBits(dec.mixture_params, rgb, cfg.mixtures);
      out.rgb_bits = bits.value()(0, 0);
    }
    total = total.defined() ? Add(total, bits) : bits;
    summary = dec.summary;
  }
  const double uniform = static_cast<double>(geom.count(s)) * cfg.latent_channels *
                         std::log2(static_cast<double>(cfg.quantizer.num_bins));
  out.latent_bits.back() = uniform;
  Matrix c(1, 1);
  c(0, 0) = uniform;
  out.total = Add(total, Constant(std::move(c)));
  return out;
}

}  // namespace mnet
