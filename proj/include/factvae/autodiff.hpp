// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#ifndef FACTVAE_AUTODIFF_HPP
#define FACTVAE_AUTODIFF_HPP

#include <functional>
#include <utility>
#include <vector>

#include "factvae/types.hpp"

namespace factvae::ad {

/// Derivative convention for |x|: sign(x) away from zero, 0 at the kink.
/// The value 0 is a valid subgradient and keeps proximal zeros stationary.
double subgradient_abs(double x);

/// A trainable value with its gradient accumulator (same shape).
struct Parameter {
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(Index rows, Index cols)
      : value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}
  explicit Parameter(Matrix v) : value(std::move(v)) {
    grad = Matrix::Zero(value.rows(), value.cols());
  }

  void zero_grad() { grad.setZero(); }
  Index rows() const { return value.rows(); }
  Index cols() const { return value.cols(); }
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid until Tape::clear().
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int index) : tape_(tape), index_(index) {}

  Tape& tape() const { return *tape_; }
  int index() const { return index_; }
  const Matrix& value() const;

 private:
  Tape* tape_ = nullptr;
  int index_ = -1;
};

/// Reverse-mode tape over dense matrices (vectors are n x 1, scalars 1 x 1).
///
/// Build a graph with constant()/param() leaves and the free functions
/// below, then call backward() on a scalar node: it zeroes every node
/// gradient, seeds the root with 1, sweeps the tape in reverse, and adds
/// each parameter leaf's gradient into its Parameter::grad accumulator.
/// backward() never mutates node values, so repeated sweeps over the same
/// graph (with accumulators reset in between) are identical.
///
/// Every forward operation checks its result for NaN/Inf and throws
/// NumericalError naming the operation otherwise.
///
/// Single-owner during forward + backward; distinct tapes are independent.
class Tape {
 public:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&)> backprop;  // empty for leaves
  };

  /// Leaf that does not require a gradient.
  Var constant(Matrix value);

  /// Leaf bound to `p`; backward() adds its gradient into p.grad.
  /// The value is snapshotted, so later edits to p.value do not affect
  /// an already-built graph.
  Var param(Parameter& p);

  void backward(const Var& root);

  const Matrix& value(const Var& v) const { return nodes_[v.index()].value; }
  const Matrix& grad(const Var& v) const { return nodes_[v.index()].grad; }

  /// Drops all nodes and bindings, keeping allocated capacity.
  void clear();
  std::size_t size() const { return nodes_.size(); }

  // Node-level access for operator implementations.
  int emplace(Matrix value);
  Node& node(int index) { return nodes_[index]; }
  const Node& node(int index) const { return nodes_[index]; }

 private:
  std::vector<Node> nodes_;
  std::vector<std::pair<int, Parameter*>> bindings_;
};

inline const Matrix& Var::value() const { return tape_->value(*this); }

// ---- primitive operations ------------------------------------------------
// Shapes must match where elementwise; matvec takes (m x n) * (n x 1).

Var matvec(const Var& a, const Var& x);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var cmul(const Var& a, const Var& b);  // elementwise product
Var cdiv(const Var& a, const Var& b);  // elementwise quotient
Var scale(const Var& a, double c);
Var offset(const Var& a, double c);  // elementwise a + c
Var abs(const Var& a);
Var tanh(const Var& a);
Var softplus(const Var& a);
Var log(const Var& a);
Var exp(const Var& a);
Var square(const Var& a);
Var sqrt(const Var& a);
Var sum(const Var& a);  // 1 x 1

}  // namespace factvae::ad

#endif  // FACTVAE_AUTODIFF_HPP
