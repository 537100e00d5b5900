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

// The multiscale model: one encoder and one decoder per scale, the shared
// quantizer, and the checkpoint format binding coded streams to weights.

#ifndef MNET_MODEL_HPP_
#define MNET_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mnet/likelihood.hpp"
#include "mnet/quantizer.hpp"
#include "mnet/sparse_nn.hpp"

namespace mnet {

struct ModelConfig {
  int num_scales = 3;
  int channels = 64;
  int latent_channels = 5;
  int res_blocks = 8;
  int mixtures = 10;
  QuantizerConfig quantizer;

  int rgb_param_channels() const { return kRgbFieldsPerMixture * mixtures; }
  int latent_param_channels() const {
    return kLatentFieldsPerMixture * latent_channels * mixtures;
  }
  friend bool operator==(const ModelConfig& a, const ModelConfig& b) {
    return a.num_scales == b.num_scales && a.channels == b.channels &&
           a.latent_channels == b.latent_channels && a.res_blocks == b.res_blocks &&
           a.mixtures == b.mixtures && a.quantizer.num_bins == b.quantizer.num_bins &&
           a.quantizer.temperature == b.quantizer.temperature;
  }
};

struct TrainingMetadata {
  std::uint32_t epoch = 0;
  double loss_bpp = 0.0;
};

class Model {
 public:
  Model() = default;
  // He-uniform initialisation from `seed`.
  static Model Create(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  // scale is 1-based.
  ScaleEncoder& encoder(int scale) { return encoders_[static_cast<std::size_t>(scale - 1)]; }
  ScaleDecoder& decoder(int scale) { return decoders_[static_cast<std::size_t>(scale - 1)]; }

  // Encoders for scales 1..S then decoders S..1, weight before bias.
  std::vector<Parameter*> Parameters();
  std::vector<const Parameter*> Parameters() const;
  std::size_t NumWeights() const;

  // FNV-1a over configuration, quantizer centers and every weight.
  std::uint64_t Digest() const;

  std::vector<std::uint8_t> Serialize() const;
  static Model Deserialize(std::span<const std::uint8_t> bytes);
  void Save(const std::filesystem::path& path) const;
  static Model Load(const std::filesystem::path& path);

  TrainingMetadata metadata;

 private:
  explicit Model(const ModelConfig& config);

  ModelConfig config_;
  std::vector<ScaleEncoder> encoders_;
  std::vector<ScaleDecoder> decoders_;
};

// RGB 0..255 -> [-1,1]
Matrix NormalizeRgb(std::span<const std::int32_t> rgb, Eigen::Index rows);

struct LatentCodes {
  // Per scale n (index n-1): symbols on level n, row-major rows x channels.
  std::vector<std::vector<std::int32_t>> symbols;
  std::vector<Matrix> values;
};

// Runs the encoders and hard-quantizes each latent.
LatentCodes RunEncoders(Model& model, const BlockGeometry& geom,
                        const Matrix& normalized_rgb);

struct LossBreakdown {
  Var total;  // bits, multiscale cross-entropy
  double rgb_bits = 0.0;
  std::vector<double> latent_bits;  // per scale n (index n-1); last is uniform
};

// Full forward pass with the training loss. `rgb` holds N*3 symbols in the
// canonical order of geom.pyramid level 0.
LossBreakdown ComputeLoss(Model& model, const BlockGeometry& geom,
                          std::span<const std::int32_t> rgb, bool track,
                          QuantizeMode mode = QuantizeMode::kStraightThrough);

}  // namespace mnet

#endif  // MNET_MODEL_HPP_
