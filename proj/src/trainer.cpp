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

#include "mnet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "mnet/codec.hpp"
#include "mnet/error.hpp"
#include "mnet/random.hpp"

namespace mnet {
namespace {

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void Shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[UniformIndex(rng, i)]);
  }
}

std::size_t TotalPoints(std::span<const TrainingBlock> blocks,
                        std::span<const std::size_t> ids) {
  std::size_t n = 0;
  for (auto i : ids) n += blocks[i].size();
  return n;
}

double LossOver(Model& model, std::span<const TrainingBlock> blocks,
                std::span<const std::size_t> ids) {
  double bits = 0.0;
  for (auto i : ids) {
    bits += ComputeLoss(model, blocks[i].geometry, blocks[i].rgb, false).total.value()(0, 0);
  }
  return bits / static_cast<double>(TotalPoints(blocks, ids));
}

}  // namespace

TrainingBlock MakeTrainingBlock(const Block& block, int num_scales) {
  TrainingBlock out;
  out.coords = block.voxels.coords;
  out.rgb = TensorColors(block.voxels);
  out.geometry = BuildBlockGeometry(out.coords, num_scales);
  return out;
}

TrainResult Train(std::span<const TrainingBlock> blocks, Model initial,
                  const TrainConfig& config) {
  if (blocks.empty()) throw Error(ErrorCode::kEmptyDataset, "no training blocks");
  if (config.batch_size < 1 || config.patience < 1 || config.passes_per_epoch < 1) {
    throw Error(ErrorCode::kOutOfRange, "batch_size, patience and passes must be >= 1");
  }
  const auto start = Clock::now();
  std::mt19937_64 rng(config.seed);

  std::vector<std::size_t> order(blocks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Shuffle(order, rng);
  const auto num_val = std::min(
      blocks.size() - 1,
      static_cast<std::size_t>(config.validation_fraction * static_cast<double>(blocks.size())));
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(num_val));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(num_val), order.end());

  TrainResult result;
  Model model = std::move(initial);
  const std::vector<Parameter*> params = model.Parameters();
  double best = 0.0;
  int since_best = 0;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    double epoch_bits = 0.0;
    std::size_t epoch_points = 0;
    for (int pass = 0; pass < config.passes_per_epoch && !result.hit_time_limit; ++pass) {
      Shuffle(train, rng);
      for (std::size_t b0 = 0; b0 < train.size(); b0 += static_cast<std::size_t>(config.batch_size)) {
        if (config.time_limit_seconds > 0 && SecondsSince(start) > config.time_limit_seconds) {
          result.hit_time_limit = true;
          break;
        }
        const std::size_t b1 = std::min(train.size(), b0 + static_cast<std::size_t>(config.batch_size));
        const std::span<const std::size_t> batch(train.data() + b0, b1 - b0);
        const double inv_points = 1.0 / static_cast<double>(TotalPoints(blocks, batch));
        for (Parameter* p : params) p->ZeroGrad();
        try {
          for (auto i : batch) {
            LossBreakdown loss = ComputeLoss(model, blocks[i].geometry, blocks[i].rgb, true);
            const double bits = loss.total.value()(0, 0);
            if (!std::isfinite(bits)) throw Error(ErrorCode::kNonFiniteInput, "loss");
            epoch_bits += bits;
            Backward(Scale(loss.total, inv_points));
          }
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kNonFiniteInput) throw;
          result.diverged = true;
          break;
        }
        epoch_points += TotalPoints(blocks, batch);
        AdamStep(params, config.adam, epoch);
      }
      if (result.diverged) break;
    }
    if (result.diverged || epoch_points == 0) break;

    EpochLog log;
    log.epoch = epoch;
    log.learning_rate = LearningRate(config.adam, epoch);
    log.train_bpp = epoch_bits / static_cast<double>(epoch_points);
    try {
      log.validation_bpp =
          val.empty() ? LossOver(model, blocks, train) : LossOver(model, blocks, val);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNonFiniteInput) throw;
      result.diverged = true;
      break;
    }
    if (!std::isfinite(log.validation_bpp)) {
      result.diverged = true;
      break;
    }
    log.seconds = SecondsSince(epoch_start);
    result.history.push_back(log);
    if (config.on_epoch) config.on_epoch(log);

    if (result.best_epoch < 0 || log.validation_bpp < best) {
      best = log.validation_bpp;
      result.best_epoch = epoch;
      result.model = model;
      result.model.metadata = {static_cast<std::uint32_t>(epoch), log.validation_bpp};
      since_best = 0;
    } else if (++since_best >= config.patience) {
      result.stopped_early = true;
      break;
    }
    if (result.hit_time_limit) break;
  }
  if (result.best_epoch < 0) {
    result.model = std::move(model);
  }
  result.best_validation_bpp = best;
  return result;
}

TrainResult Train(std::span<const TrainingBlock> blocks, const ModelConfig& model_config,
                  const TrainConfig& config) {
  return Train(blocks, Model::Create(model_config, config.seed), config);
}

double EvaluateLoss(Model& model, std::span<const TrainingBlock> blocks) {
  std::vector<std::size_t> ids(blocks.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  return LossOver(model, blocks, ids);
}

std::vector<TrainingBlock> LoadTrainingBlocks(const std::filesystem::path& dir,
                                              int num_scales, std::int32_t block_size) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ply") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<TrainingBlock> out;
  for (const auto& f : files) {
    const PointCloud cloud = ReadPly(f);
    const SparseTensor voxels = Voxelize(cloud, InferBitDepth(cloud));
    for (const Block& b : PartitionBlocks(voxels, block_size)) {
      out.push_back(MakeTrainingBlock(b, num_scales));
    }
  }
  return out;
}

std::vector<EvaluationRow> Evaluate(std::span<const std::filesystem::path> files,
                                    Model& model, const EvaluateOptions& options) {
  std::vector<EvaluationRow> rows;
  for (const auto& f : files) {
    const PointCloud cloud = ReadPly(f);
    const SparseTensor voxels = Voxelize(cloud, InferBitDepth(cloud));
    const std::vector<std::int32_t> rgb = TensorColors(voxels);
    const auto start = Clock::now();
    const CloudEncodeResult enc =
        EncodeCloud(model, voxels.coords, rgb, options.block_size, options.threads);
    const double seconds = SecondsSince(start);
    if (options.verify &&
        DecodeCloud(model, voxels.coords, enc.bytes, nullptr, options.threads) != rgb) {
      throw Error(ErrorCode::kCorruptStream, "round trip mismatch for " + f.string());
    }
    rows.push_back({f.stem().string(), voxels.size(), MeasureBpp(enc.bytes.size(), voxels.size()),
                    seconds});
  }
  return rows;
}

std::string FormatEvaluationCsv(std::span<const EvaluationRow> rows) {
  std::ostringstream out;
  out << "name,points,bpp,enc_seconds\n";
  char buf[128];
  double points = 0.0, bpp = 0.0, secs = 0.0;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%zu,%.2f,%.2f\n", r.points, r.bpp, r.enc_seconds);
    out << r.name << ',' << buf;
    points += static_cast<double>(r.points);
    bpp += r.bpp;
    secs += r.enc_seconds;
  }
  if (!rows.empty()) {
    const double n = static_cast<double>(rows.size());
    std::snprintf(buf, sizeof(buf), "Average,%.0f,%.2f,%.2f\n", points / n, bpp / n, secs / n);
    out << buf;
  }
  return out.str();
}

void WriteEvaluationCsv(std::span<const EvaluationRow> rows,
                        const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out << FormatEvaluationCsv(rows);
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace mnet
