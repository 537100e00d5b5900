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

#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "mnet/error.hpp"
#include "mnet/likelihood.hpp"
#include "oracles.hpp"

namespace mnet {
namespace {

using testing::RandomMatrix;

double Logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Direct mixture pmf from the logistic CDF at both bin edges, with open
// outer bins. Used as an independent route against DlmPmf.
std::vector<double> PmfOracle(const std::vector<double>& w, const std::vector<double>& mu,
                              const std::vector<double>& s, const SymbolGrid& grid) {
  std::vector<double> p(static_cast<std::size_t>(grid.size), 0.0);
  for (int m = 0; m < grid.size; ++m) {
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double x = grid.value(m);
      const double hi = m == grid.size - 1 ? 1.0 : Logistic((x + grid.half_width - mu[k]) / s[k]);
      const double lo = m == 0 ? 0.0 : Logistic((x - grid.half_width - mu[k]) / s[k]);
      p[static_cast<std::size_t>(m)] += w[k] * (hi - lo);
    }
  }
  return p;
}

struct RandomMixture {
  std::vector<double> w, mu, s;
};

RandomMixture DrawMixture(std::mt19937_64& rng, int k) {
  RandomMixture r;
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    r.w.push_back(UniformDouble(rng, 0.01, 1.0));
    total += r.w.back();
    r.mu.push_back(UniformDouble(rng, -1.2, 1.2));
    r.s.push_back(std::exp(UniformDouble(rng, -7.0, 1.0)));
  }
  for (auto& x : r.w) x /= total;
  return r;
}

SymbolGrid EightLevelGrid() { return {8, -1.0, 2.0 / 7.0, 1.0 / 7.0}; }

TEST_SUITE("likelihood") {

TEST_CASE("grids") {
  const SymbolGrid rgb = SymbolGrid::Rgb();
  CHECK(rgb.value(0) == -1.0);
  CHECK(rgb.value(255) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rgb.Nearest(rgb.value(128)) == 128);
  const SymbolGrid lat = SymbolGrid::Latent(QuantizerConfig{});
  CHECK(lat.size == 26);
  CHECK(lat.half_width == doctest::Approx(0.04).epsilon(1e-15));
}

TEST_CASE("near-delta component concentrates on its bin") {
  const SymbolGrid grid = SymbolGrid::Rgb();
  for (int m : {0, 77, 255}) {
    const std::vector<double> w = {1.0}, mu = {grid.value(m)}, s = {1e-6};
    const auto p = DlmPmf(w, mu, s, grid);
    CHECK(p[static_cast<std::size_t>(m)] >= 1.0 - 1e-9);
  }
}

TEST_CASE("single component at symbol 128 matches the sigmoid difference") {
  const SymbolGrid grid = SymbolGrid::Rgb();
  const double x = grid.value(128);
  CHECK(x == doctest::Approx(0.00392).epsilon(1e-3));
  const std::vector<double> w = {1.0}, mu = {0.0}, s = {0.1};
  const double expected = Logistic((x + 1.0 / 255.0) / 0.1) - Logistic((x - 1.0 / 255.0) / 0.1);
  CHECK(DlmPmf(w, mu, s, grid)[128] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("pmf agrees with the direct oracle and sums to one") {
  std::mt19937_64 rng(1);
  for (const SymbolGrid& grid : {SymbolGrid::Rgb(), SymbolGrid::Latent(QuantizerConfig{})}) {
    for (int trial = 0; trial < 100; ++trial) {
      const RandomMixture r = DrawMixture(rng, 1 + static_cast<int>(UniformIndex(rng, 10)));
      const auto p = DlmPmf(r.w, r.mu, r.s, grid);
      const auto q = PmfOracle(r.w, r.mu, r.s, grid);
      CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) <= 1e-9);
      double worst = 0.0;
      for (std::size_t m = 0; m < p.size(); ++m) worst = std::max(worst, std::abs(p[m] - q[m]));
      CHECK(worst <= 1e-12);
    }
  }
}

TEST_CASE("invalid scales are rejected") {
  const std::vector<double> w = {1.0}, mu = {0.0};
  for (double bad : {0.0, -1.0, 1e-7, std::nan("")}) {
    const std::vector<double> s = {bad};
    CHECK_THROWS_AS(DlmPmf(w, mu, s, SymbolGrid::Rgb()), Error);
  }
}

TEST_CASE("log probability agrees with the pmf") {
  std::mt19937_64 rng(2);
  const SymbolGrid grid = SymbolGrid::Latent(QuantizerConfig{});
  for (int trial = 0; trial < 200; ++trial) {
    ChannelMixture mix;
    for (int k = 0; k < 3; ++k) {
      mix.logits.push_back(UniformDouble(rng, -2, 2));
      mix.means.push_back(UniformDouble(rng, -1, 1));
      mix.log_scales.push_back(UniformDouble(rng, -8, 0));
    }
    const auto pmf = MixturePmf(mix, grid);
    const int m = static_cast<int>(UniformIndex(rng, 26));
    const double lp = MixtureLogProb(mix, m, grid.value(m), grid);
    if (pmf[static_cast<std::size_t>(m)] > 1e-12) {
      CHECK(std::exp(lp) == doctest::Approx(pmf[static_cast<std::size_t>(m)]).epsilon(1e-8));
    }
  }
  ChannelMixture mix{{0.0}, {0.0}, {0.0}};
  CHECK_THROWS_AS(MixtureLogProb(mix, 26, 0.0, grid), Error);
}

TEST_CASE("uncoupled channels give a product of marginals") {
  std::mt19937_64 rng(3);
  const int k = 4;
  Matrix row = RandomMatrix(rng, 1, 12 * k);
  row.block(0, 9 * k, 1, 3 * k).setZero();
  const std::span<const double> r(row.data(), 12 * k);
  const SymbolGrid grid = SymbolGrid::Rgb();
  const int sr = 10, sg = 200, sb = 128;
  double expected = 0.0;
  const int syms[3] = {sr, sg, sb};
  for (int c = 0; c < 3; ++c) {
    const auto pmf = MixturePmf(RgbChannelMixture(r, k, c, 0.0, 0.0), grid);
    expected += std::log(pmf[static_cast<std::size_t>(syms[c])]);
  }
  CHECK(RgbJointLogProb(r, k, sr, sg, sb) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("saturated red coefficient shifts the green mean by the red value") {
  const int k = 1;
  std::vector<double> row(12, 0.0);
  row[9] = 20.0;  // tanh(20) == 1 in double precision
  const ChannelMixture g = RgbChannelMixture(row, k, 1, 0.5, 0.0);
  CHECK(g.means[0] == 0.5);
  const ChannelMixture b = RgbChannelMixture(row, k, 2, 0.5, -0.25);
  CHECK(b.means[0] == 0.0);
}

TEST_CASE("channel-autoregressive joint sums to one on a reduced grid") {
  std::mt19937_64 rng(4);
  const SymbolGrid grid = EightLevelGrid();
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 1 + static_cast<int>(UniformIndex(rng, 5));
    const Matrix row = RandomMatrix(rng, 1, 12 * k, -2, 2);
    const std::span<const double> r(row.data(), static_cast<std::size_t>(12 * k));
    double total = 0.0;
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b)
        for (int c = 0; c < 8; ++c) total += std::exp(RgbJointLogProb(r, k, a, b, c, grid));
    CHECK(std::abs(total - 1.0) <= 1e-9);
  }
}

TEST_CASE("rgb negative log-likelihood gradient matches finite differences") {
  std::mt19937_64 rng(5);
  const int k = 2;
  Parameter p(RandomMatrix(rng, 5, 12 * k, -1.5, 1.5));
  std::vector<std::int32_t> sym(15);
  for (auto& s : sym) s = static_cast<std::int32_t>(UniformIndex(rng, 256));
  p.ZeroGrad();
  Backward(RgbNllBits(Leaf(p), sym, k));
  const Matrix fd = testing::NumericGradient(
      p, [&] { return RgbNllBits(Leaf(p, false), sym, k).value()(0, 0); });
  CHECK(testing::GradientError(p.grad, fd) <= 1e-6);
}

TEST_CASE("latent negative log-likelihood gradient matches finite differences") {
  std::mt19937_64 rng(6);
  const int k = 2, channels = 5;
  const QuantizerConfig qc;
  const SymbolGrid grid = SymbolGrid::Latent(qc);
  Parameter p(RandomMatrix(rng, 4, 3 * channels * k, -1.0, 1.0));
  Parameter v(RandomMatrix(rng, 4, channels, -1.0, 1.0));
  const HardQuantized q = QuantizeHard(v.value, qc);
  v.value = q.values;
  auto loss = [&](bool track) {
    return LatentNllBits(Leaf(p, track), Leaf(v, track), q.symbols, channels, k, grid);
  };
  p.ZeroGrad();
  v.ZeroGrad();
  Backward(loss(true));
  auto f = [&] { return loss(false).value()(0, 0); };
  CHECK(testing::GradientError(p.grad, testing::NumericGradient(p, f)) <= 1e-6);
  CHECK(testing::GradientError(v.grad, testing::NumericGradient(v, f)) <= 1e-6);
}

TEST_CASE("log-scale clamp stops the gradient below the floor") {
  std::vector<double> row(12, 0.0);
  for (int c = 0; c < 3; ++c) row[static_cast<std::size_t>(6 + c)] = -9.0;
  Matrix m = Eigen::Map<const Matrix>(row.data(), 1, 12);
  Parameter p(m);
  p.ZeroGrad();
  const std::vector<std::int32_t> sym = {128, 128, 128};
  Backward(RgbNllBits(Leaf(p), sym, 1));
  for (int c = 0; c < 3; ++c) CHECK(p.grad(0, 6 + c) == 0.0);
}

TEST_CASE("cross-entropy is the sum of its terms plus the uniform coarsest term") {
  std::mt19937_64 rng(7);
  const int k = 2, channels = 5;
  const QuantizerConfig qc;
  const SymbolGrid grid = SymbolGrid::Latent(qc);
  const Matrix rgb_params = RandomMatrix(rng, 6, 12 * k);
  std::vector<std::int32_t> rgb(18);
  for (auto& s : rgb) s = static_cast<std::int32_t>(UniformIndex(rng, 256));
  const Matrix lat_params = RandomMatrix(rng, 3, 3 * channels * k);
  const HardQuantized q = QuantizeHard(RandomMatrix(rng, 3, channels), qc);
  const LatentTerm term{Constant(lat_params), Constant(q.values), q.symbols};
  const double loss = CrossEntropyLoss(Constant(rgb_params), rgb, std::span(&term, 1), 2,
                                       channels, k, qc)
                          .value()(0, 0);
  const double parts =
      RgbNllBits(Constant(rgb_params), rgb, k).value()(0, 0) +
      LatentNllBits(Constant(lat_params), Constant(q.values), q.symbols, channels, k, grid)
          .value()(0, 0) +
      2.0 * channels * std::log2(26.0);
  CHECK(loss == doctest::Approx(parts).epsilon(1e-14));
}

TEST_CASE("sharpest predictions leave little more than the coarsest term") {
  // Means on the coded values with the smallest allowed scale.
  const int k = 1, channels = 5;
  const QuantizerConfig qc;
  const SymbolGrid rgb_grid = SymbolGrid::Rgb();
  const std::vector<std::int32_t> rgb = {12, 130, 255, 0, 64, 200};
  Matrix rgb_params = Matrix::Zero(2, 12);
  for (int i = 0; i < 2; ++i) {
    for (int c = 0; c < 3; ++c) {
      rgb_params(i, 3 + c) = rgb_grid.value(rgb[static_cast<std::size_t>(3 * i + c)]);
      rgb_params(i, 6 + c) = kMinLogScale;
    }
  }
  Matrix latent(1, channels);
  latent << -1.0, -0.04, 0.2, 0.6, 1.0;
  const HardQuantized q = QuantizeHard(latent, qc);
  Matrix lat_params = Matrix::Zero(1, 3 * channels * k);
  for (int c = 0; c < channels; ++c) {
    lat_params(0, channels + c) = q.values(0, c);
    lat_params(0, 2 * channels + c) = kMinLogScale;
  }
  const LatentTerm term{Constant(lat_params), Constant(q.values), q.symbols};
  const double loss = CrossEntropyLoss(Constant(rgb_params), rgb, std::span(&term, 1), 3,
                                       channels, k, qc)
                          .value()(0, 0);
  const double floor_bits = 3.0 * channels * std::log2(26.0);
  // Interior bin mass of the sharpest logistic on the color grid; the two
  // outer bins hold more.
  const double s = std::exp(kMinLogScale);
  const double interior = Logistic(1.0 / 255.0 / s) - Logistic(-1.0 / 255.0 / s);
  CHECK(loss >= floor_bits);
  CHECK(loss <= floor_bits - 6.0 * std::log2(interior) + 1e-9);
}

TEST_CASE("uniform cdf over four symbols") {
  CHECK(UniformCdfTable(4) == std::vector<std::uint32_t>{0, 16384, 32768, 49152, 65536});
}

TEST_CASE("cdf keeps every symbol codable") {
  std::vector<double> pmf(10, 1e-9);
  pmf[3] = 1.0 - 9e-9;
  const auto cdf = BuildCdfTable(pmf);
  for (std::size_t i = 0; i < pmf.size(); ++i) CHECK(cdf[i + 1] > cdf[i]);
  CHECK(cdf.back() == 65536);
}

TEST_CASE("random pmf quantizes with small divergence") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = trial % 2 == 0 ? 256 : 26;
    std::vector<double> pmf(m);
    double total = 0.0;
    for (auto& p : pmf) {
      p = -std::log(1.0 - UniformDouble(rng));  // Dirichlet(1) via exponentials
      total += p;
    }
    for (auto& p : pmf) p /= total;
    const auto cdf = BuildCdfTable(pmf);
    const auto again = BuildCdfTable(pmf);
    CHECK(cdf == again);
    REQUIRE(cdf.back() == 65536);
    double kl = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      CHECK(cdf[i + 1] > cdf[i]);
      const double q = (cdf[i + 1] - cdf[i]) / 65536.0;
      if (pmf[i] > 0) kl += pmf[i] * std::log2(pmf[i] / q);
    }
    CHECK(kl <= 1e-3);
  }
}

TEST_CASE("degenerate pmfs are rejected") {
  const std::vector<double> half = {0.25, 0.25};
  CHECK_THROWS_AS(BuildCdfTable(half), Error);
  const std::vector<double> neg = {1.5, -0.5};
  CHECK_THROWS_AS(BuildCdfTable(neg), Error);
  const std::vector<double> empty;
  CHECK_THROWS_AS(BuildCdfTable(empty), Error);
}

TEST_CASE("mean and sampled reconstruction") {
  const SymbolGrid grid = SymbolGrid::Latent(QuantizerConfig{});
  std::vector<double> pmf(26, 0.0);
  pmf[4] = 0.5;
  pmf[8] = 0.5;
  CHECK(MeanSymbol(pmf, grid) == 6);
  CHECK(SampleSymbol(pmf, 0.0) == 4);
  CHECK(SampleSymbol(pmf, 0.49) == 4);
  CHECK(SampleSymbol(pmf, 0.51) == 8);
  CHECK(SampleSymbol(pmf, 0.999999) == 8);
}

}  // TEST_SUITE

}  // namespace
}  // namespace mnet
