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

#include "mnet/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>
#include <utility>

#include "mnet/error.hpp"

namespace mnet {
namespace internal {

struct Node {
  Matrix value;
  Matrix grad;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;
  Parameter* param = nullptr;
  std::uint64_t id = 0;
  bool requires_grad = false;

  Matrix& EnsureGrad() {
    if (grad.size() == 0 && value.size() != 0) {
      grad.setZero(value.rows(), value.cols());
    } else if (grad.rows() != value.rows() || grad.cols() != value.cols()) {
      grad.setZero(value.rows(), value.cols());
    }
    return grad;
  }
};

namespace {
thread_local std::uint64_t next_node_id = 0;
}

}  // namespace internal

using internal::Node;

Parameter::Parameter(Matrix init) : value(std::move(init)) {
  grad.setZero(value.rows(), value.cols());
  m.setZero(value.rows(), value.cols());
  v.setZero(value.rows(), value.cols());
}

const Matrix& Var::value() const { return node_->value; }
const Matrix& Var::grad() const { return node_->grad; }
bool Var::requires_grad() const { return node_ && node_->requires_grad; }

Var Var::Make(Matrix value, std::vector<Var> parents, BackwardFn backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->id = internal::next_node_id++;
  for (const auto& p : parents) {
    if (p.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(std::move(p.node_));
    node->backward = std::move(backward);
  }
  Var out;
  out.node_ = std::move(node);
  return out;
}

const Matrix& BackwardContext::grad() const { return node_.grad; }
const Matrix& BackwardContext::value() const { return node_.value; }
const Matrix& BackwardContext::parent_value(std::size_t i) const {
  return node_.parents[i]->value;
}
Matrix* BackwardContext::parent_grad(std::size_t i) {
  Node& p = *node_.parents[i];
  return p.requires_grad ? &p.EnsureGrad() : nullptr;
}

Var Constant(Matrix value) { return Var::Make(std::move(value), {}, nullptr); }

Var Leaf(Parameter& param, bool track) {
  Var out = Var::Make(param.value, {}, nullptr);
  if (track) {
    out.node_->param = &param;
    out.node_->requires_grad = true;
  }
  return out;
}

void Backward(const Var& loss) {
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw Error(ErrorCode::kNonScalarLoss,
                "loss is " + std::to_string(loss.rows()) + "x" +
                    std::to_string(loss.cols()));
  }
  if (!loss.requires_grad()) return;

  std::vector<Node*> order;
  std::vector<Node*> stack{loss.node_.get()};
  std::unordered_set<Node*> seen;
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    order.push_back(n);
    for (auto& p : n->parents) {
      if (p->requires_grad) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](const Node* a, const Node* b) { return a->id > b->id; });

  for (Node* n : order) n->grad.resize(0, 0);
  loss.node_->EnsureGrad().setConstant(1.0);
  for (Node* n : order) {
    if (n->grad.size() == 0) continue;
    if (n->backward) {
      BackwardContext ctx(*n);
      n->backward(ctx);
    }
    if (n->param != nullptr) {
      if (n->param->grad.rows() != n->grad.rows() ||
          n->param->grad.cols() != n->grad.cols()) {
        n->param->ZeroGrad();
      }
      n->param->grad += n->grad;
    }
  }
}

namespace {

void RequireSameShape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(op) + ": " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " +
                    std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

double SigmoidScalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double SoftplusScalar(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

Var Affine(const Var& x, const Var& w, const Var& b) {
  if (x.cols() != w.rows() || b.rows() != 1 || b.cols() != w.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "Affine: incompatible shapes");
  }
  Matrix out = x.value() * w.value();
  out.rowwise() += b.value().row(0);
  return Var::Make(std::move(out), {x, w, b}, [](BackwardContext& ctx) {
    const Matrix& g = ctx.grad();
    if (Matrix* gx = ctx.parent_grad(0)) {
      gx->noalias() += g * ctx.parent_value(1).transpose();
    }
    if (Matrix* gw = ctx.parent_grad(1)) {
      gw->noalias() += ctx.parent_value(0).transpose() * g;
    }
    if (Matrix* gb = ctx.parent_grad(2)) *gb += g.colwise().sum();
  });
}

Var MatMul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "MatMul: inner dimensions differ");
  }
  return Var::Make(a.value() * b.value(), {a, b}, [](BackwardContext& ctx) {
    const Matrix& g = ctx.grad();
    if (Matrix* ga = ctx.parent_grad(0)) {
      ga->noalias() += g * ctx.parent_value(1).transpose();
    }
    if (Matrix* gb = ctx.parent_grad(1)) {
      gb->noalias() += ctx.parent_value(0).transpose() * g;
    }
  });
}

Var Relu(const Var& x) {
  return Var::Make(x.value().cwiseMax(0.0), {x}, [](BackwardContext& ctx) {
    if (Matrix* gx = ctx.parent_grad(0)) {
      *gx += (ctx.parent_value(0).array() > 0.0)
                 .select(ctx.grad().array(), 0.0)
                 .matrix();
    }
  });
}

Var Add(const Var& a, const Var& b) {
  RequireSameShape(a, b, "Add");
  return Var::Make(a.value() + b.value(), {a, b}, [](BackwardContext& ctx) {
    if (Matrix* ga = ctx.parent_grad(0)) *ga += ctx.grad();
    if (Matrix* gb = ctx.parent_grad(1)) *gb += ctx.grad();
  });
}

Var Mul(const Var& a, const Var& b) {
  RequireSameShape(a, b, "Mul");
  return Var::Make(a.value().cwiseProduct(b.value()), {a, b},
                   [](BackwardContext& ctx) {
                     if (Matrix* ga = ctx.parent_grad(0)) {
                       *ga += ctx.grad().cwiseProduct(ctx.parent_value(1));
                     }
                     if (Matrix* gb = ctx.parent_grad(1)) {
                       *gb += ctx.grad().cwiseProduct(ctx.parent_value(0));
                     }
                   });
}

Var Scale(const Var& x, double k) {
  return Var::Make(x.value() * k, {x}, [k](BackwardContext& ctx) {
    if (Matrix* gx = ctx.parent_grad(0)) *gx += ctx.grad() * k;
  });
}

Var Sigmoid(const Var& x) {
  Matrix out = x.value().unaryExpr(&SigmoidScalar);
  return Var::Make(std::move(out), {x}, [](BackwardContext& ctx) {
    if (Matrix* gx = ctx.parent_grad(0)) {
      const auto s = ctx.value().array();
      *gx += (ctx.grad().array() * s * (1.0 - s)).matrix();
    }
  });
}

Var Softplus(const Var& x) {
  Matrix out = x.value().unaryExpr(&SoftplusScalar);
  return Var::Make(std::move(out), {x}, [](BackwardContext& ctx) {
    if (Matrix* gx = ctx.parent_grad(0)) {
      *gx += ctx.grad().cwiseProduct(ctx.parent_value(0).unaryExpr(&SigmoidScalar));
    }
  });
}

Var Log(const Var& x) {
  return Var::Make(x.value().array().log().matrix(), {x},
                   [](BackwardContext& ctx) {
                     if (Matrix* gx = ctx.parent_grad(0)) {
                       *gx += ctx.grad().cwiseQuotient(ctx.parent_value(0));
                     }
                   });
}

Var Exp(const Var& x) {
  return Var::Make(x.value().array().exp().matrix(), {x},
                   [](BackwardContext& ctx) {
                     if (Matrix* gx = ctx.parent_grad(0)) {
                       *gx += ctx.grad().cwiseProduct(ctx.value());
                     }
                   });
}

Var Tanh(const Var& x) {
  return Var::Make(x.value().array().tanh().matrix(), {x},
                   [](BackwardContext& ctx) {
                     if (Matrix* gx = ctx.parent_grad(0)) {
                       const auto t = ctx.value().array();
                       *gx += (ctx.grad().array() * (1.0 - t * t)).matrix();
                     }
                   });
}

Var SoftmaxRows(const Var& x) {
  Matrix out = x.value();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
  return Var::Make(std::move(out), {x}, [](BackwardContext& ctx) {
    if (Matrix* gx = ctx.parent_grad(0)) {
      const Matrix& y = ctx.value();
      const Matrix& g = ctx.grad();
      for (Eigen::Index i = 0; i < y.rows(); ++i) {
        const double dot = y.row(i).dot(g.row(i));
        gx->row(i).array() += y.row(i).array() * (g.row(i).array() - dot);
      }
    }
  });
}

Var SliceCols(const Var& x, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > x.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "SliceCols: range out of bounds");
  }
  Matrix out = x.value().middleCols(begin, count);
  return Var::Make(std::move(out), {x}, [begin, count](BackwardContext& ctx) {
    if (Matrix* gx = ctx.parent_grad(0)) {
      gx->middleCols(begin, count) += ctx.grad();
    }
  });
}

Var ConcatCols(const Var& a, const Var& b) {
  if (a.rows() != b.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "ConcatCols: row counts differ");
  }
  const Eigen::Index ca = a.cols();
  Matrix out(a.rows(), a.cols() + b.cols());
  out.leftCols(ca) = a.value();
  out.rightCols(b.cols()) = b.value();
  return Var::Make(std::move(out), {a, b}, [ca](BackwardContext& ctx) {
    const Matrix& g = ctx.grad();
    if (Matrix* ga = ctx.parent_grad(0)) *ga += g.leftCols(ca);
    if (Matrix* gb = ctx.parent_grad(1)) *gb += g.rightCols(g.cols() - ca);
  });
}

Var Sum(const Var& x) {
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  return Var::Make(std::move(out), {x}, [](BackwardContext& ctx) {
    if (Matrix* gx = ctx.parent_grad(0)) gx->array() += ctx.grad()(0, 0);
  });
}

Var GatherRows(const Var& x, std::vector<std::int64_t> index) {
  Matrix out(static_cast<Eigen::Index>(index.size()), x.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= x.rows()) {
      throw Error(ErrorCode::kShapeMismatch, "GatherRows: index out of range");
    }
    out.row(static_cast<Eigen::Index>(i)) = x.value().row(index[i]);
  }
  return Var::Make(std::move(out), {x},
                   [index = std::move(index)](BackwardContext& ctx) {
                     if (Matrix* gx = ctx.parent_grad(0)) {
                       const Matrix& g = ctx.grad();
                       for (std::size_t i = 0; i < index.size(); ++i) {
                         gx->row(index[i]) += g.row(static_cast<Eigen::Index>(i));
                       }
                     }
                   });
}

Var ScatterAddRows(const Var& x, std::vector<std::int64_t> index,
                   Eigen::Index num_out) {
  if (static_cast<Eigen::Index>(index.size()) != x.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "ScatterAddRows: index size != rows");
  }
  Matrix out = Matrix::Zero(num_out, x.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= num_out) {
      throw Error(ErrorCode::kShapeMismatch, "ScatterAddRows: index out of range");
    }
    out.row(index[i]) += x.value().row(static_cast<Eigen::Index>(i));
  }
  return Var::Make(std::move(out), {x},
                   [index = std::move(index)](BackwardContext& ctx) {
                     if (Matrix* gx = ctx.parent_grad(0)) {
                       const Matrix& g = ctx.grad();
                       for (std::size_t i = 0; i < index.size(); ++i) {
                         gx->row(static_cast<Eigen::Index>(i)) += g.row(index[i]);
                       }
                     }
                   });
}

Var RowwiseMax(std::span<const Var> inputs) {
  if (inputs.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "RowwiseMax: no inputs");
  }
  for (const auto& in : inputs) RequireSameShape(inputs[0], in, "RowwiseMax");
  const Eigen::Index rows = inputs[0].rows();
  const Eigen::Index cols = inputs[0].cols();
  Matrix out = inputs[0].value();
  std::vector<std::uint32_t> winner(static_cast<std::size_t>(rows * cols), 0);
  for (std::size_t k = 1; k < inputs.size(); ++k) {
    const Matrix& v = inputs[k].value();
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (v(i, j) > out(i, j)) {
          out(i, j) = v(i, j);
          winner[static_cast<std::size_t>(i * cols + j)] =
              static_cast<std::uint32_t>(k);
        }
      }
    }
  }
  std::vector<Var> parents(inputs.begin(), inputs.end());
  return Var::Make(std::move(out), std::move(parents),
                   [winner = std::move(winner)](BackwardContext& ctx) {
                     const Matrix& g = ctx.grad();
                     const Eigen::Index cols = g.cols();
                     for (Eigen::Index i = 0; i < g.rows(); ++i) {
                       for (Eigen::Index j = 0; j < cols; ++j) {
                         const auto k = winner[static_cast<std::size_t>(i * cols + j)];
                         if (Matrix* gk = ctx.parent_grad(k)) (*gk)(i, j) += g(i, j);
                       }
                     }
                   });
}

Var SegmentMax(const Var& x, std::vector<std::int64_t> segment,
               Eigen::Index num_out) {
  if (static_cast<Eigen::Index>(segment.size()) != x.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "SegmentMax: segment size != rows");
  }
  const Eigen::Index cols = x.cols();
  const Matrix& in = x.value();
  Matrix out(num_out, cols);
  std::vector<std::int64_t> argmax(static_cast<std::size_t>(num_out * cols), -1);
  for (std::size_t i = 0; i < segment.size(); ++i) {
    const std::int64_t s = segment[i];
    if (s < 0 || s >= num_out) {
      throw Error(ErrorCode::kShapeMismatch, "SegmentMax: segment out of range");
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      auto& a = argmax[static_cast<std::size_t>(s * cols + j)];
      const double val = in(static_cast<Eigen::Index>(i), j);
      // Strict comparison keeps the lowest row on ties.
      if (a < 0 || val > out(s, j)) {
        a = static_cast<std::int64_t>(i);
        out(s, j) = val;
      }
    }
  }
  for (auto a : argmax) {
    if (a < 0) throw Error(ErrorCode::kShapeMismatch, "SegmentMax: empty segment");
  }
  return Var::Make(std::move(out), {x},
                   [argmax = std::move(argmax), cols](BackwardContext& ctx) {
                     if (Matrix* gx = ctx.parent_grad(0)) {
                       const Matrix& g = ctx.grad();
                       for (Eigen::Index s = 0; s < g.rows(); ++s) {
                         for (Eigen::Index j = 0; j < cols; ++j) {
                           (*gx)(argmax[static_cast<std::size_t>(s * cols + j)], j) +=
                               g(s, j);
                         }
                       }
                     }
                   });
}

}  // namespace mnet
