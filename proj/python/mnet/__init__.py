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
"""Multiscale point-cloud attribute codec."""

from ._mnet import (
    MnetError,
    Model,
    ModelConfig,
    chunk_lengths,
    decode,
    decode_cloud,
    decode_scalable,
    encode,
    encode_cloud,
    evaluate,
    load_voxels,
    measure_bpp,
    prefix_length,
    read_ply,
    train,
)

__all__ = [
    "MnetError",
    "Model",
    "ModelConfig",
    "chunk_lengths",
    "decode",
    "decode_cloud",
    "decode_scalable",
    "encode",
    "encode_cloud",
    "evaluate",
    "load_voxels",
    "measure_bpp",
    "prefix_length",
    "read_ply",
    "train",
]
