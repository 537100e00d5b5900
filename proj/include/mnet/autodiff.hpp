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

// Reverse-mode automatic differentiation over dense row-major matrices.
//
// Nodes are reference counted. A node keeps its parents alive only when it
// requires a gradient, so inference-only graphs release intermediates as soon
// as the caller drops them. Backward visits nodes in reverse construction
// order, which is a fixed topological order for a given program.

#ifndef MNET_AUTODIFF_HPP_
#define MNET_AUTODIFF_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "mnet/tensor.hpp"

namespace mnet {

struct Parameter {
  Matrix value;
  Matrix grad;
  // Adam moments.
  Matrix m;
  Matrix v;
  std::int64_t step = 0;

  Parameter() = default;
  explicit Parameter(Matrix init);

  void ZeroGrad() { grad.setZero(value.rows(), value.cols()); }
  Eigen::Index size() const { return value.size(); }
};

namespace internal {
struct Node;
}

class BackwardContext;
using BackwardFn = std::function<void(BackwardContext&)>;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  // Empty until Backward() has reached this node.
  const Matrix& grad() const;
  bool requires_grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool defined() const { return node_ != nullptr; }

  // Builds a node from a value, its parents and the rule that routes the
  // node's gradient to them. The rule is dropped when no parent needs it.
  static Var Make(Matrix value, std::vector<Var> parents, BackwardFn backward);

 private:
  friend class BackwardContext;
  friend Var Leaf(Parameter& param, bool track);
  friend void Backward(const Var& loss);
  std::shared_ptr<internal::Node> node_;
};

class BackwardContext {
 public:
  explicit BackwardContext(internal::Node& node) : node_(node) {}
  const Matrix& grad() const;
  const Matrix& value() const;
  const Matrix& parent_value(std::size_t i) const;
  // Zero-initialised accumulator for parent i, or nullptr when the parent
  // does not require a gradient.
  Matrix* parent_grad(std::size_t i);

 private:
  internal::Node& node_;
};

Var Constant(Matrix value);
// A node bound to a trainable parameter. With track=false the parameter is
// read as a constant.
Var Leaf(Parameter& param, bool track = true);

// Populates gradients on every reachable node and accumulates into the
// Parameter::grad of every tracked leaf. `loss` must be 1x1.
void Backward(const Var& loss);

// ---- primitives ----
// x: N x Cin, w: Cin x Cout, b: 1 x Cout.
Var Affine(const Var& x, const Var& w, const Var& b);
Var MatMul(const Var& a, const Var& b);
Var Relu(const Var& x);
Var Add(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var Scale(const Var& x, double k);
Var Sigmoid(const Var& x);
Var Softplus(const Var& x);
Var Log(const Var& x);
Var Exp(const Var& x);
Var Tanh(const Var& x);
Var SoftmaxRows(const Var& x);
Var SliceCols(const Var& x, Eigen::Index begin, Eigen::Index count);
Var ConcatCols(const Var& a, const Var& b);
Var Sum(const Var& x);
// out[i] = x[index[i]]
Var GatherRows(const Var& x, std::vector<std::int64_t> index);
// out[index[i]] += x[i]; out has `num_out` rows.
Var ScatterAddRows(const Var& x, std::vector<std::int64_t> index,
                   Eigen::Index num_out);
// Elementwise max across same-shaped inputs; ties go to the earliest input.
Var RowwiseMax(std::span<const Var> inputs);
// out[segment[i]] = channelwise max over rows i in the segment; ties go to the
// lowest row. Every output row must own at least one input row.
Var SegmentMax(const Var& x, std::vector<std::int64_t> segment,
               Eigen::Index num_out);

}  // namespace mnet

#endif  // MNET_AUTODIFF_HPP_
