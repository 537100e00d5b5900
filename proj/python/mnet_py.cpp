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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "mnet/codec.hpp"
#include "mnet/error.hpp"
#include "mnet/model.hpp"
#include "mnet/pc_io.hpp"
#include "mnet/trainer.hpp"

namespace py = pybind11;

namespace {

using IntArray = py::array_t<std::int32_t, py::array::c_style | py::array::forcecast>;

std::vector<mnet::Coord3> ToCoords(const IntArray& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw py::value_error("coords must be N x 3");
  auto r = a.unchecked<2>();
  std::vector<mnet::Coord3> out(static_cast<std::size_t>(a.shape(0)));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) out[static_cast<std::size_t>(i)] = {r(i, 0), r(i, 1), r(i, 2)};
  return out;
}

std::vector<std::int32_t> ToColors(const IntArray& a, std::size_t rows) {
  if (a.ndim() != 2 || a.shape(1) != 3 || static_cast<std::size_t>(a.shape(0)) != rows) {
    throw py::value_error("colors must be N x 3 matching coords");
  }
  return {a.data(), a.data() + a.size()};
}

IntArray ToArray(const std::vector<std::int32_t>& v, py::ssize_t cols) {
  IntArray out({static_cast<py::ssize_t>(v.size()) / cols, cols});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

IntArray CoordArray(const std::vector<mnet::Coord3>& coords) {
  std::vector<std::int32_t> flat;
  flat.reserve(3 * coords.size());
  for (const auto& c : coords) flat.insert(flat.end(), {c.x, c.y, c.z});
  return ToArray(flat, 3);
}

std::span<const std::uint8_t> AsBytes(const py::bytes& b) {
  const std::string_view v = b;
  return {reinterpret_cast<const std::uint8_t*>(v.data()), v.size()};
}

py::bytes FromBytes(const std::vector<std::uint8_t>& v) {
  return {reinterpret_cast<const char*>(v.data()), v.size()};
}

mnet::ScalableOptions MakeScalable(const std::string& mode, std::uint64_t seed,
                                   std::size_t chunks) {
  mnet::ScalableOptions o;
  if (mode == "sample") {
    o.mode = mnet::ReconstructionMode::kSample;
  } else if (mode != "mean") {
    throw py::value_error("mode must be 'mean' or 'sample'");
  }
  o.seed = seed;
  o.chunks = chunks;
  return o;
}

}  // namespace

PYBIND11_MODULE(_mnet, m) {
  m.doc() = "Multiscale point-cloud attribute codec";

  static py::exception<mnet::Error> error(m, "MnetError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const mnet::Error& e) {
      py::object exc = error;
      py::object inst = exc(e.what());
      inst.attr("code") = std::string(mnet::ErrorCodeName(e.code()));
      PyErr_SetObject(error.ptr(), inst.ptr());
    }
  });

  py::class_<mnet::ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("num_scales", &mnet::ModelConfig::num_scales)
      .def_readwrite("channels", &mnet::ModelConfig::channels)
      .def_readwrite("latent_channels", &mnet::ModelConfig::latent_channels)
      .def_readwrite("res_blocks", &mnet::ModelConfig::res_blocks)
      .def_readwrite("mixtures", &mnet::ModelConfig::mixtures)
      .def("__eq__", [](const mnet::ModelConfig& a, const mnet::ModelConfig& b) { return a == b; });

  py::class_<mnet::Model>(m, "Model")
      .def_static("create", &mnet::Model::Create, py::arg("config"), py::arg("seed") = 0)
      .def_static("load", &mnet::Model::Load, py::arg("path"))
      .def_static("deserialize", [](const py::bytes& b) { return mnet::Model::Deserialize(AsBytes(b)); })
      .def("save", &mnet::Model::Save, py::arg("path"))
      .def("serialize", [](const mnet::Model& self) { return FromBytes(self.Serialize()); })
      .def_property_readonly("config", &mnet::Model::config)
      .def_property_readonly("digest", &mnet::Model::Digest)
      .def_property_readonly("num_weights", &mnet::Model::NumWeights);

  m.def("read_ply", [](const std::filesystem::path& path, bool require_colors) {
    const mnet::PointCloud pc = mnet::ReadPly(path, require_colors);
    py::array_t<double> pos({static_cast<py::ssize_t>(pc.size()), py::ssize_t{3}});
    std::vector<std::int32_t> col;
    for (std::size_t i = 0; i < pc.size(); ++i) {
      std::copy(pc.positions[i].begin(), pc.positions[i].end(), pos.mutable_data() + 3 * i);
      col.insert(col.end(), pc.colors[i].begin(), pc.colors[i].end());
    }
    return py::make_tuple(pos, ToArray(col, 3));
  }, py::arg("path"), py::arg("require_colors") = true,
     "Returns (positions float64 N x 3, colors int32 N x 3).");

  m.def("load_voxels", [](const std::filesystem::path& path) {
    const mnet::PointCloud pc = mnet::ReadPly(path);
    const mnet::SparseTensor v = mnet::Voxelize(pc, mnet::InferBitDepth(pc));
    return py::make_tuple(CoordArray(v.coords), ToArray(mnet::TensorColors(v), 3));
  }, py::arg("path"), "Voxelized (coords, colors) of a PLY, both int32 N x 3.");

  m.def("encode", [](mnet::Model& model, const IntArray& coords, const IntArray& colors) {
    const auto c = ToCoords(coords);
    const auto rgb = ToColors(colors, c.size());
    std::vector<std::uint8_t> bytes;
    {
      py::gil_scoped_release release;
      bytes = mnet::Encode(model, c, rgb).bytes;
    }
    return FromBytes(bytes);
  }, py::arg("model"), py::arg("coords"), py::arg("colors"), "Codes one block.");

  m.def("decode", [](mnet::Model& model, const IntArray& coords, const py::bytes& stream) {
    const auto c = ToCoords(coords);
    return ToArray(mnet::Decode(model, c, AsBytes(stream)).rgb, 3);
  }, py::arg("model"), py::arg("coords"), py::arg("stream"));

  m.def("decode_scalable", [](mnet::Model& model, const IntArray& coords,
                              const py::bytes& stream, const std::string& mode,
                              std::uint64_t seed, std::size_t chunks) {
    const auto c = ToCoords(coords);
    return ToArray(mnet::DecodeScalable(model, c, AsBytes(stream),
                                        MakeScalable(mode, seed, chunks)).rgb, 3);
  }, py::arg("model"), py::arg("coords"), py::arg("stream"), py::arg("mode") = "mean",
     py::arg("seed") = 0, py::arg("chunks") = 0);

  m.def("chunk_lengths", [](const py::bytes& stream) {
    const auto parsed = mnet::ParseStream(AsBytes(stream));
    std::vector<std::size_t> out;
    for (const auto& c : parsed.chunks) out.push_back(c.size());
    return out;
  }, py::arg("stream"), "Payload length of each complete chunk.");

  m.def("prefix_length", [](const py::bytes& stream, std::size_t chunks) {
    return mnet::PrefixLength(AsBytes(stream), chunks);
  }, py::arg("stream"), py::arg("chunks"));

  m.def("encode_cloud", [](mnet::Model& model, const IntArray& coords, const IntArray& colors,
                           std::int32_t block_size, int threads) {
    const auto c = ToCoords(coords);
    const auto rgb = ToColors(colors, c.size());
    return FromBytes(mnet::EncodeCloud(model, c, rgb, block_size, threads).bytes);
  }, py::arg("model"), py::arg("coords"), py::arg("colors"), py::arg("block_size") = 64,
     py::arg("threads") = 1);

  m.def("decode_cloud", [](mnet::Model& model, const IntArray& coords, const py::bytes& stream,
                           int threads) {
    const auto c = ToCoords(coords);
    return ToArray(mnet::DecodeCloud(model, c, AsBytes(stream), nullptr, threads), 3);
  }, py::arg("model"), py::arg("coords"), py::arg("stream"), py::arg("threads") = 1);

  m.def("measure_bpp", &mnet::MeasureBpp, py::arg("total_bytes"), py::arg("num_points"));

  m.def("train", [](const std::filesystem::path& data_dir, const mnet::ModelConfig& config,
                    int max_epochs, double lr, int batch_size, int patience,
                    double validation_fraction, std::uint64_t seed,
                    std::int32_t block_size) {
    const auto blocks = mnet::LoadTrainingBlocks(data_dir, config.num_scales, block_size);
    mnet::TrainConfig tc;
    tc.max_epochs = max_epochs;
    tc.adam.lr = lr;
    tc.batch_size = batch_size;
    tc.patience = patience;
    tc.validation_fraction = validation_fraction;
    tc.seed = seed;
    mnet::TrainResult r;
    {
      py::gil_scoped_release release;
      r = mnet::Train(blocks, config, tc);
    }
    py::list history;
    for (const auto& h : r.history) {
      py::dict d;
      d["epoch"] = h.epoch;
      d["learning_rate"] = h.learning_rate;
      d["train_bpp"] = h.train_bpp;
      d["validation_bpp"] = h.validation_bpp;
      history.append(d);
    }
    return py::make_tuple(std::move(r.model), history);
  }, py::arg("data_dir"), py::arg("config"), py::arg("max_epochs") = 200,
     py::arg("lr") = 5e-4, py::arg("batch_size") = 128, py::arg("patience") = 20,
     py::arg("validation_fraction") = 0.1, py::arg("seed") = 0, py::arg("block_size") = 64,
     "Returns (best model, per-epoch history).");

  m.def("evaluate", [](const std::vector<std::filesystem::path>& files, mnet::Model& model,
                       std::int32_t block_size) {
    mnet::EvaluateOptions o;
    o.block_size = block_size;
    const auto rows = mnet::Evaluate(files, model, o);
    return mnet::FormatEvaluationCsv(rows);
  }, py::arg("files"), py::arg("model"), py::arg("block_size") = 64,
     "CSV text name,points,bpp,enc_seconds with an Average row.");
}
