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

#include "mnet/range_coder.hpp"

#include <algorithm>
#include <string>

#include "mnet/error.hpp"
#include "mnet/likelihood.hpp"

namespace mnet {
namespace {
constexpr std::uint32_t kTop = 1u << 24;
}

void ValidateCdf(std::span<const std::uint32_t> cdf, int precision) {
  if (cdf.size() < 2 || cdf.front() != 0 ||
      cdf.back() != (std::uint32_t{1} << precision)) {
    throw Error(ErrorCode::kInvalidCdf, "bad table endpoints");
  }
  for (std::size_t i = 1; i < cdf.size(); ++i) {
    if (cdf[i] <= cdf[i - 1]) {
      throw Error(ErrorCode::kInvalidCdf,
                  "table not strictly increasing at " + std::to_string(i));
    }
  }
}

RangeEncoder::RangeEncoder(int precision) : precision_(precision) {
  if (precision < 1 || precision > 16) {
    throw Error(ErrorCode::kInvalidCdf, "precision must be in [1,16]");
  }
}

void RangeEncoder::Encode(int symbol, std::span<const std::uint32_t> cdf) {
  ValidateCdf(cdf, precision_);
  if (symbol < 0 || static_cast<std::size_t>(symbol) + 1 >= cdf.size()) {
    throw Error(ErrorCode::kInvalidCdf,
                "symbol " + std::to_string(symbol) + " outside table");
  }
  const auto s = static_cast<std::size_t>(symbol);
  EncodeInterval(cdf[s], cdf[s + 1] - cdf[s], s + 2 == cdf.size());
}

void RangeEncoder::EncodeInterval(std::uint32_t start, std::uint32_t freq, bool last) {
  const std::uint32_t r = range_ >> precision_;
  low_ += static_cast<std::uint64_t>(r) * start;
  // The last symbol also takes the truncation remainder of the range.
  range_ = last ? range_ - r * start : r * freq;
  while (range_ < kTop) {
    range_ <<= 8;
    ShiftLow();
  }
}

void RangeEncoder::Emit(std::uint8_t byte) {
  if (skip_first_) {
    skip_first_ = false;
    return;
  }
  out_.push_back(byte);
}

void RangeEncoder::ShiftLow() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t pending = cache_;
    do {
      Emit(static_cast<std::uint8_t>(pending + carry));
      pending = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

std::vector<std::uint8_t> RangeEncoder::Finish() {
  for (int i = 0; i < 5; ++i) ShiftLow();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> data, int precision)
    : data_(data), precision_(precision) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | NextByte();
}

std::uint8_t RangeDecoder::NextByte() {
  if (pos_ >= data_.size()) {
    throw Error(ErrorCode::kCorruptStream, "stream exhausted");
  }
  return data_[pos_++];
}

int RangeDecoder::Decode(std::span<const std::uint32_t> cdf) {
  if (code_ >= range_) {
    throw Error(ErrorCode::kCorruptStream, "code outside the coding range");
  }
  const std::uint32_t r = range_ >> precision_;
  const std::uint32_t value = std::min(code_ / r, cdf.back() - 1);
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), value);
  const auto s = static_cast<std::size_t>(it - cdf.begin()) - 1;
  code_ -= r * cdf[s];
  range_ = s + 2 == cdf.size() ? range_ - r * cdf[s] : r * (cdf[s + 1] - cdf[s]);
  while (range_ < kTop) {
    code_ = (code_ << 8) | NextByte();
    range_ <<= 8;
  }
  return static_cast<int>(s);
}

std::vector<std::uint8_t> EncodeUniform(std::span<const std::int32_t> symbols,
                                        int alphabet) {
  const auto cdf = UniformCdfTable(alphabet);
  RangeEncoder enc;
  for (auto s : symbols) enc.Encode(s, cdf);
  return enc.Finish();
}

std::vector<std::int32_t> DecodeUniform(std::span<const std::uint8_t> data,
                                        std::size_t count, int alphabet) {
  const auto cdf = UniformCdfTable(alphabet);
  RangeDecoder dec(data);
  std::vector<std::int32_t> out(count);
  for (auto& s : out) s = dec.Decode(cdf);
  return out;
}

}  // namespace mnet
