# Copyright 2026 The MNeT Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ==============================================================================
"""Smoke tests for the Python bindings."""

import os
import pathlib

import numpy as np
import pytest

import mnet

DATA = pathlib.Path(os.environ.get(
    "MNET_TEST_DATA_DIR",
    pathlib.Path(__file__).resolve().parents[1] / "data"))
CLOUDS = DATA / "clouds"


def small_model(seed=0):
  cfg = mnet.ModelConfig()
  cfg.num_scales = 3
  cfg.channels = 8
  cfg.res_blocks = 1
  cfg.mixtures = 2
  return mnet.Model.create(cfg, seed)


def random_block(rng, n, edge=16):
  flat = rng.choice(edge**3, size=n, replace=False)
  coords = np.stack(np.unravel_index(flat, (edge,) * 3), axis=1).astype(np.int32)
  colors = rng.integers(0, 256, size=(n, 3), dtype=np.int32)
  return coords, colors


def test_block_round_trip():
  rng = np.random.default_rng(0)
  model = small_model()
  coords, colors = random_block(rng, 200)
  stream = mnet.encode(model, coords, colors)
  np.testing.assert_array_equal(mnet.decode(model, coords, stream), colors)
  assert mnet.encode(model, coords, colors) == stream


def test_scalable_prefix():
  rng = np.random.default_rng(1)
  model = small_model()
  coords, colors = random_block(rng, 150)
  stream = mnet.encode(model, coords, colors)
  lengths = mnet.chunk_lengths(stream)
  assert len(lengths) == 4
  prefix = stream[:mnet.prefix_length(stream, 3)]
  mean = mnet.decode_scalable(model, coords, prefix, mode="mean")
  a = mnet.decode_scalable(model, coords, prefix, mode="sample", seed=3)
  b = mnet.decode_scalable(model, coords, prefix, mode="sample", seed=3)
  assert mean.shape == colors.shape
  np.testing.assert_array_equal(a, b)
  assert ((mean >= 0) & (mean <= 255)).all()


def test_digest_mismatch_is_reported():
  rng = np.random.default_rng(2)
  coords, colors = random_block(rng, 50)
  stream = mnet.encode(small_model(0), coords, colors)
  with pytest.raises(mnet.MnetError) as info:
    mnet.decode(small_model(1), coords, stream)
  assert info.value.code == "DigestMismatch"


def test_model_serialization(tmp_path):
  model = small_model(4)
  path = tmp_path / "m.mnck"
  model.save(path)
  loaded = mnet.Model.load(path)
  assert loaded.digest == model.digest
  assert loaded.config == model.config
  assert mnet.Model.deserialize(model.serialize()).digest == model.digest


def test_ply_cloud_round_trip():
  coords, colors = mnet.load_voxels(CLOUDS / "rocket_32.ply")
  positions, raw = mnet.read_ply(CLOUDS / "rocket_32.ply")
  assert positions.shape == (1024, 3)
  assert coords.shape == colors.shape == (1024, 3)
  model = small_model()
  stream = mnet.encode_cloud(model, coords, colors)
  np.testing.assert_array_equal(mnet.decode_cloud(model, coords, stream), colors)
  assert mnet.measure_bpp(len(stream), len(coords)) == pytest.approx(
      8 * len(stream) / len(coords))


def test_evaluate_csv():
  files = sorted(CLOUDS.glob("*.ply"))
  csv = mnet.evaluate(files, small_model()).splitlines()
  assert csv[0] == "name,points,bpp,enc_seconds"
  assert len(csv) == len(files) + 2
  assert csv[-1].startswith("Average,")


def test_train_returns_history(tmp_path):
  cfg = mnet.ModelConfig()
  cfg.num_scales = 2
  cfg.channels = 4
  cfg.res_blocks = 0
  cfg.mixtures = 1
  model, history = mnet.train(CLOUDS, cfg, max_epochs=2, lr=1e-3,
                              validation_fraction=0.0, block_size=16)
  assert 1 <= len(history) <= 2
  assert all(np.isfinite(h["validation_bpp"]) for h in history)
  assert model.config == cfg
