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

// mnet: train, encode, decode and evaluate point-cloud attribute streams.
//
//   mnet train <data-dir> --out model.mnck
//   mnet encode <in.ply> --model model.mnck --out cloud.bin
//   mnet decode <geometry.ply> <cloud.bin> --model model.mnck --out rec.ply
//   mnet decode-scalable <geometry.ply> <cloud.bin> --model model.mnck
//        --out rec.ply --mode mean|sample --seed 0 --chunks 3
//   mnet evaluate <dir> --model model.mnck --csv results.csv
//   mnet self-check
//
// Exit status: 0 on success, 1 on usage errors, 2 on data or model errors.
// --model and train --out default to $MNET_CHECKPOINT_DIR/model.mnck.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mnet/codec.hpp"
#include "mnet/error.hpp"
#include "mnet/model.hpp"
#include "mnet/pc_io.hpp"
#include "mnet/trainer.hpp"
#include "self_check.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct Options {
  int threads = 1;
  bool verbose = false;
  std::string model;
  std::string out;

  // train
  std::string data_dir;
  std::string init;
  int scales = 3;
  int channels = 64;
  int res_blocks = 8;
  int mixtures = 10;
  int epochs = 200;
  int batch = 128;
  int patience = 20;
  int passes = 1;
  double lr = 5e-4;
  double time_limit = 0.0;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
  std::int32_t block_size = 64;

  // encode / decode
  std::string input;
  std::string stream;
  std::string mode = "mean";
  std::size_t chunks = 0;

  // evaluate
  std::string csv;
};

std::string DefaultCheckpoint() {
  const char* dir = std::getenv("MNET_CHECKPOINT_DIR");
  if (dir == nullptr || *dir == '\0') return "";
  return (fs::path(dir) / "model.mnck").string();
}

std::vector<std::uint8_t> ReadBytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mnet::Error(mnet::ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteBytesAtomic(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw mnet::Error(mnet::ErrorCode::kIo, "cannot write " + path.string());
    }
  }
  fs::rename(tmp, path);
}

double SecondsSince(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

mnet::SparseTensor LoadVoxels(const fs::path& path, bool require_colors, bool* has_colors) {
  const mnet::PointCloud cloud = mnet::ReadPly(path, require_colors);
  if (has_colors != nullptr) *has_colors = cloud.has_colors;
  return mnet::Voxelize(cloud, mnet::InferBitDepth(cloud));
}

int RunTrain(const Options& o) {
  mnet::ModelConfig mc;
  mc.num_scales = o.scales;
  mc.channels = o.channels;
  mc.res_blocks = o.res_blocks;
  mc.mixtures = o.mixtures;
  const auto blocks = mnet::LoadTrainingBlocks(o.data_dir, mc.num_scales, o.block_size);

  mnet::TrainConfig tc;
  tc.batch_size = o.batch;
  tc.adam.lr = o.lr;
  tc.patience = o.patience;
  tc.max_epochs = o.epochs;
  tc.seed = o.seed;
  tc.validation_fraction = o.val_fraction;
  tc.passes_per_epoch = o.passes;
  tc.time_limit_seconds = o.time_limit;
  tc.on_epoch = [&](const mnet::EpochLog& log) {
    std::printf("epoch %d lr %.3g train %.3f bpp val %.3f bpp (%.1f s)\n", log.epoch,
                log.learning_rate, log.train_bpp, log.validation_bpp, log.seconds);
    std::fflush(stdout);
  };

  mnet::TrainResult result;
  if (o.init.empty()) {
    result = mnet::Train(blocks, mc, tc);
  } else {
    result = mnet::Train(blocks, mnet::Model::Load(o.init), tc);
  }
  if (result.best_epoch < 0) {
    std::fprintf(stderr, "training produced no usable epoch\n");
    return kExitData;
  }
  result.model.Save(o.out);
  std::printf("best epoch %d val %.2f bpp%s%s%s\n", result.best_epoch,
              result.best_validation_bpp, result.stopped_early ? " (early stop)" : "",
              result.hit_time_limit ? " (time limit)" : "",
              result.diverged ? " (diverged)" : "");
  return 0;
}

int RunEncode(const Options& o) {
  mnet::Model model = mnet::Model::Load(o.model);
  const mnet::SparseTensor voxels = LoadVoxels(o.input, true, nullptr);
  const auto rgb = mnet::TensorColors(voxels);
  const auto start = std::chrono::steady_clock::now();
  const auto enc = mnet::EncodeCloud(model, voxels.coords, rgb, o.block_size, o.threads);
  const double seconds = SecondsSince(start);
  WriteBytesAtomic(o.out, enc.bytes);
  std::printf("points %zu blocks %zu bytes %zu\n", enc.num_points, enc.num_blocks,
              enc.bytes.size());
  std::printf("bpp %.2f\n", mnet::MeasureBpp(enc.bytes.size(), enc.num_points));
  std::printf("seconds %.2f\n", seconds);
  return 0;
}

int RunDecode(const Options& o, bool scalable) {
  mnet::Model model = mnet::Model::Load(o.model);
  bool has_colors = false;
  const mnet::SparseTensor voxels = LoadVoxels(o.input, false, &has_colors);
  const auto bytes = ReadBytes(o.stream);

  mnet::ScalableOptions so;
  so.mode = o.mode == "sample" ? mnet::ReconstructionMode::kSample
                               : mnet::ReconstructionMode::kMean;
  so.seed = o.seed;
  so.chunks = o.chunks;
  const auto start = std::chrono::steady_clock::now();
  const auto rgb =
      mnet::DecodeCloud(model, voxels.coords, bytes, scalable ? &so : nullptr, o.threads);
  const double seconds = SecondsSince(start);

  mnet::PointCloud rec;
  rec.positions.reserve(voxels.size());
  rec.colors.reserve(voxels.size());
  for (std::size_t i = 0; i < voxels.size(); ++i) {
    const auto& c = voxels.coords[i];
    rec.positions.push_back({double(c.x), double(c.y), double(c.z)});
    rec.colors.push_back({rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]});
  }
  mnet::WritePly(rec, o.out);
  std::printf("points %zu seconds %.2f\n", voxels.size(), seconds);
  if (has_colors) {
    std::printf("lossless: %s\n", rgb == mnet::TensorColors(voxels) ? "true" : "false");
  }
  return 0;
}

int RunEvaluate(const Options& o) {
  mnet::Model model = mnet::Model::Load(o.model);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(o.data_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".ply") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw mnet::Error(mnet::ErrorCode::kEmptyDataset, "no .ply files in " + o.data_dir);
  }
  mnet::EvaluateOptions eo;
  eo.block_size = o.block_size;
  eo.threads = o.threads;
  const auto rows = mnet::Evaluate(files, model, eo);
  const std::string csv = mnet::FormatEvaluationCsv(rows);
  std::fputs(csv.c_str(), stdout);
  if (!o.csv.empty()) mnet::WriteEvaluationCsv(rows, o.csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  o.model = DefaultCheckpoint();
  CLI::App app{"Multiscale point-cloud attribute codec", "mnet"};
  app.require_subcommand(1, 1);
  app.add_option("--threads", o.threads, "Block-level worker threads")
      ->check(CLI::Range(1, 256));
  app.add_flag("-v,--verbose", o.verbose, "More output");

  auto add_model = [&](CLI::App* sub) {
    auto* opt = sub->add_option("--model", o.model, "Checkpoint file")->check(CLI::ExistingFile);
    if (o.model.empty()) opt->required();
  };
  auto add_block = [&](CLI::App* sub) {
    sub->add_option("--block-size", o.block_size, "Block edge in voxels")
        ->check(CLI::Range(2, 1 << 20));
  };

  auto* train = app.add_subcommand("train", "Train a model on every PLY in a folder");
  train->add_option("data-dir", o.data_dir)->required()->check(CLI::ExistingDirectory);
  auto* train_out = train->add_option("--out", o.out, "Checkpoint to write");
  if (DefaultCheckpoint().empty()) {
    train_out->required();
  } else {
    o.out = DefaultCheckpoint();
  }
  train->add_option("--init", o.init, "Resume from a checkpoint")->check(CLI::ExistingFile);
  train->add_option("--scales", o.scales)->check(CLI::Range(1, 16));
  train->add_option("--channels", o.channels)->check(CLI::Range(1, 4096));
  train->add_option("--res-blocks", o.res_blocks)->check(CLI::Range(0, 256));
  train->add_option("--mixtures", o.mixtures)->check(CLI::Range(1, 256));
  train->add_option("--epochs", o.epochs)->check(CLI::Range(1, 1000000));
  train->add_option("--batch", o.batch)->check(CLI::Range(1, 1 << 20));
  train->add_option("--patience", o.patience)->check(CLI::Range(1, 1000000));
  train->add_option("--passes", o.passes, "Sweeps per epoch")->check(CLI::Range(1, 1000000));
  train->add_option("--lr", o.lr)->check(CLI::PositiveNumber);
  train->add_option("--time-limit", o.time_limit, "Seconds, 0 for none")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--val-fraction", o.val_fraction)->check(CLI::Range(0.0, 0.9));
  train->add_option("--seed", o.seed);
  add_block(train);

  auto* encode = app.add_subcommand("encode", "Encode the colors of a PLY");
  encode->add_option("input", o.input)->required()->check(CLI::ExistingFile);
  encode->add_option("--out", o.out)->required();
  add_model(encode);
  add_block(encode);

  auto* decode = app.add_subcommand("decode", "Decode colors onto a geometry PLY");
  auto* scalable = app.add_subcommand("decode-scalable", "Decode a stream prefix");
  for (auto* sub : {decode, scalable}) {
    sub->add_option("geometry", o.input)->required()->check(CLI::ExistingFile);
    sub->add_option("stream", o.stream)->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out)->required();
    add_model(sub);
  }
  scalable->add_option("--mode", o.mode)->check(CLI::IsMember({"mean", "sample"}));
  scalable->add_option("--seed", o.seed);
  scalable->add_option("--chunks", o.chunks, "Chunks to consume, 0 for all")
      ->check(CLI::Range(0, 17));

  auto* evaluate = app.add_subcommand("evaluate", "Rate report over a folder of PLYs");
  evaluate->add_option("dir", o.data_dir)->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--csv", o.csv);
  add_model(evaluate);
  add_block(evaluate);

  auto* check = app.add_subcommand("self-check", "Run the built-in invariant checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*train) return RunTrain(o);
    if (*encode) return RunEncode(o);
    if (*decode) return RunDecode(o, false);
    if (*scalable) return RunDecode(o, true);
    if (*evaluate) return RunEvaluate(o);
    if (*check) return mnet::tools::RunSelfCheck(std::cout, o.verbose) ? 0 : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
