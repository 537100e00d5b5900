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

#include "mnet/adam.hpp"

#include <cmath>

namespace mnet {

double LearningRate(const AdamConfig& config, int epoch) {
  const int steps = config.decay_every > 0 ? epoch / config.decay_every : 0;
  return config.lr * std::pow(config.decay, steps);
}

void AdamStep(std::span<Parameter* const> params, const AdamConfig& config,
              int epoch) {
  const double lr = LearningRate(config, epoch);
  for (Parameter* p : params) {
    if (p->grad.size() != p->value.size()) p->ZeroGrad();
    if (p->m.size() != p->value.size()) p->m.setZero(p->value.rows(), p->value.cols());
    if (p->v.size() != p->value.size()) p->v.setZero(p->value.rows(), p->value.cols());
    ++p->step;
    const double t = static_cast<double>(p->step);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    p->m = config.beta1 * p->m + (1.0 - config.beta1) * p->grad;
    p->v = config.beta2 * p->v + (1.0 - config.beta2) * p->grad.cwiseAbs2();
    p->value.array() -= lr * (p->m.array() / c1) /
                        ((p->v.array() / c2).sqrt() + config.eps);
  }
}

}  // namespace mnet
