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

#include "mnet/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "mnet/error.hpp"

namespace mnet {
namespace {

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double Softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// log P of one logistic component for bin `m` with upper argument a and
// lower argument b, plus d/da and d/db.
struct ComponentTerm {
  double log_prob;
  double d_upper;
  double d_lower;
};

ComponentTerm ComponentLogProb(int m, int size, double a, double b) {
  if (m == 0) return {-Softplus(-a), Sigmoid(-a), 0.0};
  if (m == size - 1) return {-Softplus(b), 0.0, -Sigmoid(b)};
  // log(sigmoid(a) - sigmoid(b)) = log sigmoid(a) + log sigmoid(-b)
  //                               + log(1 - exp(-(a-b)))
  const double d = a - b;
  const double inv = 1.0 / std::expm1(d);
  return {-Softplus(-a) - Softplus(b) + std::log(-std::expm1(-d)),
          Sigmoid(-a) + inv, -Sigmoid(b) - inv};
}

struct MixtureGrad {
  std::vector<double> d_logits;
  std::vector<double> d_means;
  std::vector<double> d_log_scales;
  double d_x = 0.0;
};

double MixtureLogProbImpl(const ChannelMixture& mix, int symbol, double x,
                          const SymbolGrid& grid, MixtureGrad* grad) {
  const std::size_t k_count = mix.logits.size();
  const double max_logit = *std::max_element(mix.logits.begin(), mix.logits.end());
  double z = 0.0;
  for (double w : mix.logits) z += std::exp(w - max_logit);
  const double log_z = max_logit + std::log(z);

  std::vector<double> joint(k_count);
  std::vector<ComponentTerm> terms(k_count);
  std::vector<double> a(k_count), b(k_count), inv_s(k_count);
  double best = -INFINITY;
  for (std::size_t k = 0; k < k_count; ++k) {
    const double ls = std::max(mix.log_scales[k], kMinLogScale);
    inv_s[k] = std::exp(-ls);
    a[k] = (x + grid.half_width - mix.means[k]) * inv_s[k];
    b[k] = (x - grid.half_width - mix.means[k]) * inv_s[k];
    terms[k] = ComponentLogProb(symbol, grid.size, a[k], b[k]);
    joint[k] = mix.logits[k] - log_z + terms[k].log_prob;
    best = std::max(best, joint[k]);
  }
  double s = 0.0;
  for (double j : joint) s += std::exp(j - best);
  const double log_p = best + std::log(s);
  if (grad != nullptr) {
    grad->d_logits.assign(k_count, 0.0);
    grad->d_means.assign(k_count, 0.0);
    grad->d_log_scales.assign(k_count, 0.0);
    grad->d_x = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
      const double r = std::exp(joint[k] - log_p);
      const double pi = std::exp(mix.logits[k] - log_z);
      const double slope = (terms[k].d_upper + terms[k].d_lower) * inv_s[k];
      grad->d_logits[k] = r - pi;
      grad->d_means[k] = -r * slope;
      grad->d_x += r * slope;
      if (mix.log_scales[k] > kMinLogScale) {
        grad->d_log_scales[k] =
            -r * (terms[k].d_upper * a[k] + terms[k].d_lower * b[k]);
      }
    }
  }
  return log_p;
}

void CheckSymbol(int symbol, int size) {
  if (symbol < 0 || symbol >= size) {
    throw Error(ErrorCode::kSymbolOutOfRange,
                std::to_string(symbol) + " not in [0," + std::to_string(size) + ")");
  }
}

}  // namespace

int SymbolGrid::Nearest(double v) const {
  const double idx = std::round((v - first) / step);
  return static_cast<int>(std::clamp(idx, 0.0, static_cast<double>(size - 1)));
}

SymbolGrid SymbolGrid::Rgb() { return {256, -1.0, 1.0 / 127.5, 1.0 / 255.0}; }

SymbolGrid SymbolGrid::Latent(const QuantizerConfig& config) {
  return {config.num_bins, -1.0, 2.0 / (config.num_bins - 1), config.HalfWidth()};
}

std::vector<double> DlmPmf(std::span<const double> weights,
                           std::span<const double> means,
                           std::span<const double> scales, const SymbolGrid& grid) {
  for (double s : scales) {
    if (!(s >= kMinScale) || !std::isfinite(s)) {
      throw Error(ErrorCode::kInvalidScale, "scale " + std::to_string(s));
    }
  }
  // Mixture CDF at each interior bin edge; bins are edge differences.
  std::vector<double> pmf(static_cast<std::size_t>(grid.size));
  double prev = 0.0;
  for (int m = 0; m + 1 < grid.size; ++m) {
    const double edge = grid.value(m) + grid.half_width;
    double cdf = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      cdf += weights[k] * Sigmoid((edge - means[k]) / scales[k]);
    }
    pmf[static_cast<std::size_t>(m)] = std::max(cdf - prev, 0.0);
    prev = std::max(prev, cdf);
  }
  pmf.back() = std::max(1.0 - prev, 0.0);
  return pmf;
}

std::vector<double> MixturePmf(const ChannelMixture& mix, const SymbolGrid& grid) {
  const std::size_t k_count = mix.logits.size();
  std::vector<double> w(k_count), s(k_count);
  const double max_logit = *std::max_element(mix.logits.begin(), mix.logits.end());
  double total = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    w[k] = std::exp(mix.logits[k] - max_logit);
    total += w[k];
    s[k] = std::exp(std::max(mix.log_scales[k], kMinLogScale));
  }
  for (auto& x : w) x /= total;
  return DlmPmf(w, mix.means, s, grid);
}

double MixtureLogProb(const ChannelMixture& mix, int symbol, double x,
                      const SymbolGrid& grid) {
  CheckSymbol(symbol, grid.size);
  return MixtureLogProbImpl(mix, symbol, x, grid, nullptr);
}

ChannelMixture LatentChannelMixture(std::span<const double> row, int channels,
                                    int mixtures, int channel) {
  const auto block = static_cast<std::size_t>(channels * mixtures);
  const auto base = static_cast<std::size_t>(channel * mixtures);
  const auto k = static_cast<std::size_t>(mixtures);
  ChannelMixture mix;
  mix.logits.assign(row.begin() + base, row.begin() + base + k);
  mix.means.assign(row.begin() + block + base, row.begin() + block + base + k);
  mix.log_scales.assign(row.begin() + 2 * block + base,
                        row.begin() + 2 * block + base + k);
  return mix;
}

ChannelMixture RgbChannelMixture(std::span<const double> row, int mixtures,
                                 int channel, double red, double green) {
  const auto k_count = static_cast<std::size_t>(mixtures);
  auto field = [&](int f, std::size_t k) {
    return row[static_cast<std::size_t>(f) * k_count + k];
  };
  ChannelMixture mix;
  mix.logits.resize(k_count);
  mix.means.resize(k_count);
  mix.log_scales.resize(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    mix.logits[k] = field(channel, k);
    mix.log_scales[k] = field(6 + channel, k);
    double mean = field(3 + channel, k);
    if (channel == 1) mean += std::tanh(field(9, k)) * red;
    if (channel == 2) {
      mean += std::tanh(field(10, k)) * red + std::tanh(field(11, k)) * green;
    }
    mix.means[k] = mean;
  }
  return mix;
}

double RgbJointLogProb(std::span<const double> row, int mixtures, int r, int g,
                       int b, const SymbolGrid& grid) {
  CheckSymbol(r, grid.size);
  CheckSymbol(g, grid.size);
  CheckSymbol(b, grid.size);
  const double xr = grid.value(r);
  const double xg = grid.value(g);
  const double xb = grid.value(b);
  return MixtureLogProbImpl(RgbChannelMixture(row, mixtures, 0, xr, xg), r, xr, grid, nullptr) +
         MixtureLogProbImpl(RgbChannelMixture(row, mixtures, 1, xr, xg), g, xg, grid, nullptr) +
         MixtureLogProbImpl(RgbChannelMixture(row, mixtures, 2, xr, xg), b, xb, grid, nullptr);
}

Var RgbNllBits(const Var& params, std::span<const std::int32_t> symbols,
               int mixtures) {
  const Matrix& p = params.value();
  const Eigen::Index n = p.rows();
  if (p.cols() != kRgbFieldsPerMixture * mixtures ||
      static_cast<Eigen::Index>(symbols.size()) != 3 * n) {
    throw Error(ErrorCode::kShapeMismatch, "RgbNllBits: params/symbols mismatch");
  }
  const SymbolGrid grid = SymbolGrid::Rgb();
  const bool want_grad = params.requires_grad();
  Matrix grad;
  if (want_grad) grad.setZero(n, p.cols());
  const auto k_count = static_cast<std::size_t>(mixtures);
  const double to_bits = -1.0 / std::numbers::ln2;
  double total = 0.0;
  MixtureGrad mg;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::span<const double> row(p.row(i).data(), static_cast<std::size_t>(p.cols()));
    int sym[3];
    double x[3];
    for (int c = 0; c < 3; ++c) {
      sym[c] = symbols[static_cast<std::size_t>(i * 3 + c)];
      CheckSymbol(sym[c], grid.size);
      x[c] = grid.value(sym[c]);
    }
    for (int c = 0; c < 3; ++c) {
      const ChannelMixture mix = RgbChannelMixture(row, mixtures, c, x[0], x[1]);
      total += MixtureLogProbImpl(mix, sym[c], x[c], grid, want_grad ? &mg : nullptr);
      if (!want_grad) continue;
      auto g = grad.row(i);
      for (std::size_t k = 0; k < k_count; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        const auto K = static_cast<Eigen::Index>(k_count);
        g(c * K + kk) += to_bits * mg.d_logits[k];
        g((3 + c) * K + kk) += to_bits * mg.d_means[k];
        g((6 + c) * K + kk) += to_bits * mg.d_log_scales[k];
        if (c == 1) {
          const double t = std::tanh(row[9 * k_count + k]);
          g(9 * K + kk) += to_bits * mg.d_means[k] * (1 - t * t) * x[0];
        } else if (c == 2) {
          const double t_r = std::tanh(row[10 * k_count + k]);
          const double t_g = std::tanh(row[11 * k_count + k]);
          g(10 * K + kk) += to_bits * mg.d_means[k] * (1 - t_r * t_r) * x[0];
          g(11 * K + kk) += to_bits * mg.d_means[k] * (1 - t_g * t_g) * x[1];
        }
      }
    }
  }
  Matrix out(1, 1);
  out(0, 0) = total * to_bits;
  return Var::Make(std::move(out), {params},
                   [grad = std::move(grad)](BackwardContext& ctx) {
                     if (Matrix* gp = ctx.parent_grad(0)) *gp += ctx.grad()(0, 0) * grad;
                   });
}

Var LatentNllBits(const Var& params, const Var& values,
                  std::span<const std::int32_t> symbols, int channels,
                  int mixtures, const SymbolGrid& grid) {
  const Matrix& p = params.value();
  const Matrix& v = values.value();
  const Eigen::Index n = p.rows();
  if (p.cols() != kLatentFieldsPerMixture * channels * mixtures || v.rows() != n ||
      v.cols() != channels ||
      static_cast<Eigen::Index>(symbols.size()) != n * channels) {
    throw Error(ErrorCode::kShapeMismatch, "LatentNllBits: shape mismatch");
  }
  const bool grad_p = params.requires_grad();
  const bool grad_v = values.requires_grad();
  Matrix gp, gv;
  if (grad_p) gp.setZero(n, p.cols());
  if (grad_v) gv.setZero(n, channels);
  const double to_bits = -1.0 / std::numbers::ln2;
  const auto block = static_cast<Eigen::Index>(channels * mixtures);
  double total = 0.0;
  MixtureGrad mg;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::span<const double> row(p.row(i).data(), static_cast<std::size_t>(p.cols()));
    for (int c = 0; c < channels; ++c) {
      const int s = symbols[static_cast<std::size_t>(i * channels + c)];
      CheckSymbol(s, grid.size);
      const ChannelMixture mix = LatentChannelMixture(row, channels, mixtures, c);
      const bool need = grad_p || grad_v;
      total += MixtureLogProbImpl(mix, s, v(i, c), grid, need ? &mg : nullptr);
      if (grad_v) gv(i, c) += to_bits * mg.d_x;
      if (!grad_p) continue;
      const auto base = static_cast<Eigen::Index>(c * mixtures);
      for (int k = 0; k < mixtures; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        gp(i, base + k) += to_bits * mg.d_logits[uk];
        gp(i, block + base + k) += to_bits * mg.d_means[uk];
        gp(i, 2 * block + base + k) += to_bits * mg.d_log_scales[uk];
      }
    }
  }
  Matrix out(1, 1);
  out(0, 0) = total * to_bits;
  return Var::Make(std::move(out), {params, values},
                   [gp = std::move(gp), gv = std::move(gv)](BackwardContext& ctx) {
                     const double g = ctx.grad()(0, 0);
                     if (Matrix* p = ctx.parent_grad(0)) *p += g * gp;
                     if (Matrix* v = ctx.parent_grad(1)) *v += g * gv;
                   });
}

Var CrossEntropyLoss(const Var& rgb_params, std::span<const std::int32_t> rgb_symbols,
                     std::span<const LatentTerm> latent_terms,
                     std::int64_t coarsest_count, int latent_channels,
                     int mixtures, const QuantizerConfig& quantizer) {
  const SymbolGrid grid = SymbolGrid::Latent(quantizer);
  Var loss = RgbNllBits(rgb_params, rgb_symbols, mixtures);
  for (const auto& term : latent_terms) {
    loss = Add(loss, LatentNllBits(term.params, term.values, term.symbols,
                                   latent_channels, mixtures, grid));
  }
  Matrix uniform(1, 1);
  uniform(0, 0) = static_cast<double>(coarsest_count) * latent_channels *
                  std::log2(static_cast<double>(quantizer.num_bins));
  return Add(loss, Constant(std::move(uniform)));
}

std::vector<std::uint32_t> BuildCdfTable(std::span<const double> pmf, int precision) {
  const std::size_t m = pmf.size();
  const std::uint64_t total = std::uint64_t{1} << precision;
  if (m == 0 || m > total) {
    throw Error(ErrorCode::kDegeneratePmf, "alphabet size " + std::to_string(m));
  }
  double sum = 0.0;
  for (double p : pmf) {
    if (!std::isfinite(p) || p < 0.0) {
      throw Error(ErrorCode::kDegeneratePmf, "negative or non-finite mass");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw Error(ErrorCode::kDegeneratePmf, "pmf sums to " + std::to_string(sum));
  }
  // One guaranteed unit per symbol, the rest shared by largest remainder.
  const double spare = static_cast<double>(total - m);
  std::vector<std::uint64_t> freq(m, 1);
  std::vector<double> frac(m);
  std::uint64_t assigned = m;
  for (std::size_t i = 0; i < m; ++i) {
    const double target = pmf[i] / sum * spare;
    const double base = std::floor(target);
    freq[i] += static_cast<std::uint64_t>(base);
    frac[i] = target - base;
    assigned += static_cast<std::uint64_t>(base);
  }
  if (assigned > total) {
    throw Error(ErrorCode::kDegeneratePmf, "rounding overflow");
  }
  std::uint64_t leftover = total - assigned;
  if (leftover >= m) {
    for (auto& f : freq) f += leftover / m;
    leftover %= m;
  }
  if (leftover > 0) {
    // The ordering is total, so the selected set does not depend on the
    // selection algorithm.
    std::vector<std::uint32_t> order(m);
    std::iota(order.begin(), order.end(), 0u);
    const auto nth = order.begin() + static_cast<std::ptrdiff_t>(leftover);
    std::nth_element(order.begin(), nth - 1, order.end(), [&](std::uint32_t a, std::uint32_t b) {
      return frac[a] != frac[b] ? frac[a] > frac[b] : a < b;
    });
    for (auto it = order.begin(); it != nth; ++it) ++freq[*it];
  }
  std::vector<std::uint32_t> cdf(m + 1, 0);
  for (std::size_t i = 0; i < m; ++i) {
    cdf[i + 1] = cdf[i] + static_cast<std::uint32_t>(freq[i]);
  }
  return cdf;
}

std::vector<std::uint32_t> UniformCdfTable(int alphabet, int precision) {
  std::vector<double> pmf(static_cast<std::size_t>(alphabet), 1.0 / alphabet);
  return BuildCdfTable(pmf, precision);
}

int MeanSymbol(std::span<const double> pmf, const SymbolGrid& grid) {
  double mean = 0.0;
  for (std::size_t m = 0; m < pmf.size(); ++m) {
    mean += pmf[m] * grid.value(static_cast<int>(m));
  }
  return grid.Nearest(mean);
}

int SampleSymbol(std::span<const double> pmf, double u) {
  double acc = 0.0;
  for (std::size_t m = 0; m < pmf.size(); ++m) {
    acc += pmf[m];
    if (u < acc) return static_cast<int>(m);
  }
  return static_cast<int>(pmf.size()) - 1;
}

}  // namespace mnet
