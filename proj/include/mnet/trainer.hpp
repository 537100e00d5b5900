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

#ifndef MNET_TRAINER_HPP_
#define MNET_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mnet/adam.hpp"
#include "mnet/model.hpp"
#include "mnet/pc_io.hpp"
#include "mnet/sparse_nn.hpp"

namespace mnet {

// A block ready for the network: canonical coordinates, 3 color symbols per
// point and the precomputed pyramid and kernel maps.
struct TrainingBlock {
  std::vector<Coord3> coords;
  std::vector<std::int32_t> rgb;
  BlockGeometry geometry;

  std::size_t size() const { return coords.size(); }
};

TrainingBlock MakeTrainingBlock(const Block& block, int num_scales);

struct EpochLog {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_bpp = 0.0;       // running loss over the epoch's updates
  double validation_bpp = 0.0;  // after the epoch, without gradients
  double seconds = 0.0;
};

struct TrainConfig {
  int batch_size = 128;
  AdamConfig adam;
  int patience = 20;
  int max_epochs = 200;
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;
  // Sweeps over the training split per epoch; the schedule counts epochs.
  int passes_per_epoch = 1;
  // Wall-clock budget; 0 disables. Checked between batches.
  double time_limit_seconds = 0.0;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  Model model;  // parameters of the best validation epoch
  int best_epoch = -1;
  double best_validation_bpp = 0.0;
  std::vector<EpochLog> history;
  bool stopped_early = false;
  bool hit_time_limit = false;
  // A non-finite loss or latent ended training; `model` is the best so far.
  bool diverged = false;
};

// Throws EmptyDataset when `blocks` is empty. With an empty validation
// split the training loss drives early stopping.
TrainResult Train(std::span<const TrainingBlock> blocks, Model initial,
                  const TrainConfig& config);
TrainResult Train(std::span<const TrainingBlock> blocks, const ModelConfig& model_config,
                  const TrainConfig& config);

// Bits of the multiscale cross-entropy per point over `blocks`.
double EvaluateLoss(Model& model, std::span<const TrainingBlock> blocks);

// Every *.ply under `dir` (sorted by name), voxelized and partitioned.
std::vector<TrainingBlock> LoadTrainingBlocks(const std::filesystem::path& dir,
                                              int num_scales, std::int32_t block_size = 64);

struct EvaluationRow {
  std::string name;
  std::size_t points = 0;
  double bpp = 0.0;
  double enc_seconds = 0.0;
};

struct EvaluateOptions {
  std::int32_t block_size = 64;
  int threads = 1;
  // Decode each stream and fail on any mismatch.
  bool verify = true;
};

std::vector<EvaluationRow> Evaluate(std::span<const std::filesystem::path> files,
                                    Model& model, const EvaluateOptions& options = {});

// name,points,bpp,enc_seconds with a trailing Average row (per-column mean).
std::string FormatEvaluationCsv(std::span<const EvaluationRow> rows);
void WriteEvaluationCsv(std::span<const EvaluationRow> rows,
                        const std::filesystem::path& path);

}  // namespace mnet

#endif  // MNET_TRAINER_HPP_
