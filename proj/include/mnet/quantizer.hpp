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

// Fixed-center scalar quantizer for the latent channels. Training uses the
// hard centers in the forward pass and the gradient of a softmax-weighted
// soft assignment in the backward pass.

#ifndef MNET_QUANTIZER_HPP_
#define MNET_QUANTIZER_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "mnet/autodiff.hpp"

namespace mnet {

struct QuantizerConfig {
  int num_bins = 26;
  double temperature = 1.0;

  // c_j = -1 + 2j/(num_bins-1)
  std::vector<double> Centers() const;
  double HalfWidth() const { return 1.0 / (num_bins - 1); }
};

struct HardQuantized {
  std::vector<std::int32_t> symbols;
  Matrix values;  // same shape as the input
};

// Nearest center, ties to the lower index. Input is rows x cols; symbols are
// row-major.
HardQuantized QuantizeHard(const Matrix& values, const QuantizerConfig& config);
std::int32_t QuantizeScalar(double value, std::span<const double> centers);

// Soft assignment sum_j softmax(-(v-c_j)^2/T)_j c_j.
double SoftQuantizeScalar(double value, const QuantizerConfig& config);
double SoftQuantizeDerivative(double value, const QuantizerConfig& config);

enum class QuantizeMode {
  kStraightThrough,  // forward hard, backward soft
  kSoft,             // forward and backward soft
};

Var QuantizeSoft(const Var& values, const QuantizerConfig& config,
                 QuantizeMode mode = QuantizeMode::kStraightThrough);

}  // namespace mnet

#endif  // MNET_QUANTIZER_HPP_
