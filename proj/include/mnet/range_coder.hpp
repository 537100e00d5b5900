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

// Byte-oriented range coder over 16-bit integer CDF tables.
//
// State is a 33-bit `low` (carry in bit 32) and a 32-bit `range`, kept at or
// above 2^24 by byte-wise renormalization. Carries are resolved with the
// usual cache byte plus a run of pending 0xFF bytes. The first cache byte is
// always zero and is not written. The last symbol of every table also takes
// the remainder left by truncating range / 2^precision.

#ifndef MNET_RANGE_CODER_HPP_
#define MNET_RANGE_CODER_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace mnet {

// Throws InvalidCdf unless cdf[0] == 0, cdf.back() == 2^precision and the
// table is strictly increasing.
void ValidateCdf(std::span<const std::uint32_t> cdf, int precision = 16);

class RangeEncoder {
 public:
  explicit RangeEncoder(int precision = 16);

  void Encode(int symbol, std::span<const std::uint32_t> cdf);
  // Flushes the state and returns the stream. The encoder is spent afterwards.
  std::vector<std::uint8_t> Finish();

 private:
  void EncodeInterval(std::uint32_t start, std::uint32_t freq, bool last);
  void ShiftLow();
  void Emit(std::uint8_t byte);

  int precision_;
  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  bool skip_first_ = true;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> data, int precision = 16);

  // Throws CorruptStream when the state falls outside the table or the
  // stream runs out.
  int Decode(std::span<const std::uint32_t> cdf);

  std::size_t bytes_consumed() const { return pos_; }

 private:
  std::uint8_t NextByte();

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  int precision_;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t code_ = 0;
};

std::vector<std::uint8_t> EncodeUniform(std::span<const std::int32_t> symbols,
                                        int alphabet);
std::vector<std::int32_t> DecodeUniform(std::span<const std::uint8_t> data,
                                        std::size_t count, int alphabet);

}  // namespace mnet

#endif  // MNET_RANGE_CODER_HPP_
