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

#ifndef MNET_RANDOM_HPP_
#define MNET_RANDOM_HPP_

#include <cstdint>
#include <random>

namespace mnet {

// std::mt19937_64 output is fixed by the standard; the distributions are not,
// so conversions to floating point are done here.
inline double UniformDouble(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double UniformDouble(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * UniformDouble(rng);
}

inline std::uint64_t UniformIndex(std::mt19937_64& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(UniformDouble(rng) * static_cast<double>(n)) % n;
}

}  // namespace mnet

#endif  // MNET_RANDOM_HPP_
