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

#include "mnet/quantizer.hpp"

#include <algorithm>
#include <cmath>

#include "mnet/error.hpp"

namespace mnet {

std::vector<double> QuantizerConfig::Centers() const {
  std::vector<double> c(static_cast<std::size_t>(num_bins));
  for (int j = 0; j < num_bins; ++j) {
    c[static_cast<std::size_t>(j)] = -1.0 + 2.0 * j / (num_bins - 1);
  }
  return c;
}

std::int32_t QuantizeScalar(double value, std::span<const double> centers) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::kNonFiniteInput, "cannot quantize a non-finite value");
  }
  // Nearest of the two centers bracketing the value.
  auto it = std::lower_bound(centers.begin(), centers.end(), value);
  if (it == centers.begin()) return 0;
  if (it == centers.end()) return static_cast<std::int32_t>(centers.size() - 1);
  const auto hi = static_cast<std::int32_t>(it - centers.begin());
  const double d_lo = value - centers[static_cast<std::size_t>(hi - 1)];
  const double d_hi = centers[static_cast<std::size_t>(hi)] - value;
  return d_hi < d_lo ? hi : hi - 1;
}

HardQuantized QuantizeHard(const Matrix& values, const QuantizerConfig& config) {
  const auto centers = config.Centers();
  HardQuantized out;
  out.values.resize(values.rows(), values.cols());
  out.symbols.resize(static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      const auto s = QuantizeScalar(values(i, j), centers);
      out.symbols[static_cast<std::size_t>(i * values.cols() + j)] = s;
      out.values(i, j) = centers[static_cast<std::size_t>(s)];
    }
  }
  return out;
}

namespace {

// Softmax weights over centers plus the soft value.
double SoftWeights(double v, const QuantizerConfig& config, std::vector<double>& w) {
  const auto centers = config.Centers();
  w.resize(centers.size());
  double best = -INFINITY;
  for (std::size_t j = 0; j < centers.size(); ++j) {
    const double d = v - centers[j];
    w[j] = -d * d / config.temperature;
    best = std::max(best, w[j]);
  }
  double total = 0.0;
  for (auto& x : w) {
    x = std::exp(x - best);
    total += x;
  }
  double soft = 0.0;
  for (std::size_t j = 0; j < centers.size(); ++j) {
    w[j] /= total;
    soft += w[j] * centers[j];
  }
  return soft;
}

}  // namespace

double SoftQuantizeScalar(double value, const QuantizerConfig& config) {
  std::vector<double> w;
  return SoftWeights(value, config, w);
}

double SoftQuantizeDerivative(double value, const QuantizerConfig& config) {
  // d/dv sum_j p_j c_j with logits -(v-c_j)^2/T
  //   = sum_j p_j c_j (a_j - sum_k p_k a_k), a_j = -2(v-c_j)/T
  std::vector<double> w;
  SoftWeights(value, config, w);
  const auto centers = config.Centers();
  double mean_a = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    mean_a += w[j] * (-2.0 * (value - centers[j]) / config.temperature);
  }
  double d = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double a = -2.0 * (value - centers[j]) / config.temperature;
    d += w[j] * centers[j] * (a - mean_a);
  }
  return d;
}

Var QuantizeSoft(const Var& values, const QuantizerConfig& config,
                 QuantizeMode mode) {
  const Matrix& v = values.value();
  Matrix out(v.rows(), v.cols());
  if (mode == QuantizeMode::kStraightThrough) {
    out = QuantizeHard(v, config).values;
  } else {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      out.data()[i] = SoftQuantizeScalar(v.data()[i], config);
    }
  }
  return Var::Make(std::move(out), {values}, [config](BackwardContext& ctx) {
    if (Matrix* gx = ctx.parent_grad(0)) {
      const Matrix& x = ctx.parent_value(0);
      const Matrix& g = ctx.grad();
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        gx->data()[i] += g.data()[i] * SoftQuantizeDerivative(x.data()[i], config);
      }
    }
  });
}

}  // namespace mnet
