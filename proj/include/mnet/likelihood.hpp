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

// Discretized logistic mixture (DLM) models.
//
// A mixture over a symbol grid assigns each bin the logistic-mixture mass
// between its edges; the outermost bins absorb the tails so every pmf sums
// to one. Latent channels are modelled independently. RGB is modelled
// channel-autoregressively: the green means shift by coefficient * red value
// and the blue means by the red and green values, with the coefficients
// squashed by tanh.
//
// Parameter layouts, K mixtures:
//   latent (C channels), 3*C*K columns:
//     [logit(c,k)] [mean(c,k)] [log_scale(c,k)], each block c-major.
//   rgb, 12*K columns, each field K wide:
//     logit R,G,B | mean R,G,B | log_scale R,G,B | coef GR, BR, BG

#ifndef MNET_LIKELIHOOD_HPP_
#define MNET_LIKELIHOOD_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "mnet/autodiff.hpp"
#include "mnet/quantizer.hpp"

namespace mnet {

inline constexpr double kMinLogScale = -7.0;
inline constexpr double kMinScale = 1e-6;
inline constexpr int kCdfPrecision = 16;
inline constexpr int kRgbFieldsPerMixture = 12;
inline constexpr int kLatentFieldsPerMixture = 3;

struct SymbolGrid {
  int size = 0;
  double first = 0.0;
  double step = 0.0;
  double half_width = 0.0;

  double value(int m) const { return first + step * m; }
  // Nearest symbol to a value, clamped to the grid.
  int Nearest(double v) const;

  // 256 levels, x_m = m/127.5 - 1, half width 1/255.
  static SymbolGrid Rgb();
  // Quantizer centers, half width = half the center spacing.
  static SymbolGrid Latent(const QuantizerConfig& config);
};

// One channel's mixture, raw network outputs.
struct ChannelMixture {
  std::vector<double> logits;
  std::vector<double> means;
  std::vector<double> log_scales;
};

// Pmf with explicit (already normalized) weights and scales.
std::vector<double> DlmPmf(std::span<const double> weights,
                           std::span<const double> means,
                           std::span<const double> scales, const SymbolGrid& grid);
// Pmf from raw outputs: softmax weights, log-scales clamped at kMinLogScale.
std::vector<double> MixturePmf(const ChannelMixture& mix, const SymbolGrid& grid);

// Natural-log probability of `symbol` whose bin center is `x`.
double MixtureLogProb(const ChannelMixture& mix, int symbol, double x,
                      const SymbolGrid& grid);

ChannelMixture LatentChannelMixture(std::span<const double> row, int channels,
                                    int mixtures, int channel);
// Channel 0,1,2 = R,G,B. `red`/`green` are the normalized values of the
// already-coded symbols; ignored for channels that do not depend on them.
ChannelMixture RgbChannelMixture(std::span<const double> row, int mixtures,
                                 int channel, double red, double green);

// Natural-log joint probability of one (r,g,b) triple.
double RgbJointLogProb(std::span<const double> row, int mixtures, int r, int g,
                       int b, const SymbolGrid& grid = SymbolGrid::Rgb());

// Total -log2 p over all points. params: N x 12K, symbols: N*3 row-major.
Var RgbNllBits(const Var& params, std::span<const std::int32_t> symbols,
               int mixtures);
// Total -log2 p of latent symbols. params: N x 3CK; values: N x C (the
// dequantized centers the symbols stand for; gradients flow into them).
Var LatentNllBits(const Var& params, const Var& values,
                  std::span<const std::int32_t> symbols, int channels,
                  int mixtures, const SymbolGrid& grid);

struct LatentTerm {
  Var params;
  Var values;
  std::span<const std::int32_t> symbols;
};

// Multiscale cross-entropy in bits: RGB term, latent terms, plus the constant
// uniform cost of the coarsest latent (count * channels * log2(bins)) which
// carries no gradient.
Var CrossEntropyLoss(const Var& rgb_params, std::span<const std::int32_t> rgb_symbols,
                     std::span<const LatentTerm> latent_terms,
                     std::int64_t coarsest_count, int latent_channels,
                     int mixtures, const QuantizerConfig& quantizer);

// Integer CDF of length M+1 with cdf[M] = 2^precision and every symbol at
// least one unit wide. Largest-remainder rounding, ties to the lower index.
std::vector<std::uint32_t> BuildCdfTable(std::span<const double> pmf,
                                         int precision = kCdfPrecision);
std::vector<std::uint32_t> UniformCdfTable(int alphabet,
                                           int precision = kCdfPrecision);

// Symbol whose grid value is nearest the pmf mean.
int MeanSymbol(std::span<const double> pmf, const SymbolGrid& grid);
// Inverse-CDF sample for u in [0,1).
int SampleSymbol(std::span<const double> pmf, double u);

}  // namespace mnet

#endif  // MNET_LIKELIHOOD_HPP_
