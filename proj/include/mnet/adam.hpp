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

#ifndef MNET_ADAM_HPP_
#define MNET_ADAM_HPP_

#include <span>

#include "mnet/autodiff.hpp"

namespace mnet {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Step decay: lr * decay^floor(epoch / decay_every).
  double decay = 0.75;
  int decay_every = 5;
};

double LearningRate(const AdamConfig& config, int epoch);

// One bias-corrected Adam update on every parameter, in the given order.
void AdamStep(std::span<Parameter* const> params, const AdamConfig& config,
              int epoch);

}  // namespace mnet

#endif  // MNET_ADAM_HPP_
