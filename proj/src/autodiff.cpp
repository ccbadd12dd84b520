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

#include "factvae/autodiff.hpp"

#include <cmath>
#include <string>

namespace factvae::ad {

namespace {

void check_finite(const Matrix& m, const char* op) {
  if (!m.allFinite()) {
    throw NumericalError(std::string("non-finite value produced by '") + op +
                         "'");
  }
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          std::string(op) + ": shape mismatch");
}

}  // namespace

double subgradient_abs(double x) {
  if (x > 0.0) return 1.0;
  if (x < 0.0) return -1.0;
  return 0.0;
}

Var Tape::constant(Matrix value) {
  check_finite(value, "constant");
  return Var(this, emplace(std::move(value)));
}

Var Tape::param(Parameter& p) {
  check_finite(p.value, "param");
  const int idx = emplace(p.value);
  bindings_.emplace_back(idx, &p);
  return Var(this, idx);
}

int Tape::emplace(Matrix value) {
  const int idx = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{std::move(value), Matrix(), nullptr});
  return idx;
}

void Tape::backward(const Var& root) {
  require(root.index() >= 0 &&
              root.index() < static_cast<int>(nodes_.size()),
          "backward: root is not on this tape");
  const Matrix& rv = nodes_[root.index()].value;
  require(rv.rows() == 1 && rv.cols() == 1, "backward: root must be scalar");
  for (Node& n : nodes_) {
    n.grad.setZero(n.value.rows(), n.value.cols());
  }
  nodes_[root.index()].grad(0, 0) = 1.0;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    if (nodes_[i].backprop) nodes_[i].backprop(*this);
  }
  for (auto& [idx, p] : bindings_) {
    p->grad += nodes_[idx].grad;
  }
}

void Tape::clear() {
  nodes_.clear();
  bindings_.clear();
}

namespace {

// Builds a node from an already-computed value and attaches the backward
// closure after insertion so it can capture its own index.
template <class Backprop>
Var make_node(Tape& t, Matrix value, const char* op, Backprop make_backprop) {
  check_finite(value, op);
  const int self = t.emplace(std::move(value));
  t.node(self).backprop = make_backprop(self);
  return Var(&t, self);
}

}  // namespace

Var matvec(const Var& a, const Var& x) {
  Tape& t = a.tape();
  const Matrix& av = a.value();
  const Matrix& xv = x.value();
  require(xv.cols() == 1 && av.cols() == xv.rows(),
          "matvec: expects (m x n) * (n x 1)");
  Matrix y = av * xv;
  const int ia = a.index(), ix = x.index();
  return make_node(t, std::move(y), "matvec", [ia, ix](int self) {
    return [self, ia, ix](Tape& tt) {
      const Matrix& g = tt.node(self).grad;
      tt.node(ia).grad.noalias() += g * tt.node(ix).value.transpose();
      tt.node(ix).grad.noalias() += tt.node(ia).value.transpose() * g;
    };
  });
}

Var add(const Var& a, const Var& b) {
  Tape& t = a.tape();
  check_same_shape(a.value(), b.value(), "add");
  const int ia = a.index(), ib = b.index();
  return make_node(t, a.value() + b.value(), "add", [ia, ib](int self) {
    return [self, ia, ib](Tape& tt) {
      const Matrix& g = tt.node(self).grad;
      tt.node(ia).grad += g;
      tt.node(ib).grad += g;
    };
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = a.tape();
  check_same_shape(a.value(), b.value(), "sub");
  const int ia = a.index(), ib = b.index();
  return make_node(t, a.value() - b.value(), "sub", [ia, ib](int self) {
    return [self, ia, ib](Tape& tt) {
      const Matrix& g = tt.node(self).grad;
      tt.node(ia).grad += g;
      tt.node(ib).grad -= g;
    };
  });
}

Var cmul(const Var& a, const Var& b) {
  Tape& t = a.tape();
  check_same_shape(a.value(), b.value(), "cmul");
  const int ia = a.index(), ib = b.index();
  return make_node(t, a.value().cwiseProduct(b.value()), "cmul",
                   [ia, ib](int self) {
                     return [self, ia, ib](Tape& tt) {
                       const Matrix& g = tt.node(self).grad;
                       tt.node(ia).grad +=
                           g.cwiseProduct(tt.node(ib).value);
                       tt.node(ib).grad +=
                           g.cwiseProduct(tt.node(ia).value);
                     };
                   });
}

Var cdiv(const Var& a, const Var& b) {
  Tape& t = a.tape();
  check_same_shape(a.value(), b.value(), "cdiv");
  const int ia = a.index(), ib = b.index();
  return make_node(t, a.value().cwiseQuotient(b.value()), "cdiv",
                   [ia, ib](int self) {
                     return [self, ia, ib](Tape& tt) {
                       const Matrix& g = tt.node(self).grad;
                       const Matrix& bv = tt.node(ib).value;
                       const Matrix& yv = tt.node(self).value;
                       tt.node(ia).grad += g.cwiseQuotient(bv);
                       tt.node(ib).grad -=
                           g.cwiseProduct(yv).cwiseQuotient(bv);
                     };
                   });
}

Var scale(const Var& a, double c) {
  Tape& t = a.tape();
  const int ia = a.index();
  return make_node(t, a.value() * c, "scale", [ia, c](int self) {
    return [self, ia, c](Tape& tt) {
      tt.node(ia).grad += tt.node(self).grad * c;
    };
  });
}

Var offset(const Var& a, double c) {
  Tape& t = a.tape();
  const int ia = a.index();
  return make_node(t, (a.value().array() + c).matrix(), "offset",
                   [ia](int self) {
                     return [self, ia](Tape& tt) {
                       tt.node(ia).grad += tt.node(self).grad;
                     };
                   });
}

Var abs(const Var& a) {
  Tape& t = a.tape();
  const int ia = a.index();
  return make_node(t, a.value().cwiseAbs(), "abs", [ia](int self) {
    return [self, ia](Tape& tt) {
      const Matrix& g = tt.node(self).grad;
      const Matrix& av = tt.node(ia).value;
      tt.node(ia).grad +=
          g.cwiseProduct(av.unaryExpr([](double x) {
            return subgradient_abs(x);
          }));
    };
  });
}

Var tanh(const Var& a) {
  Tape& t = a.tape();
  const int ia = a.index();
  return make_node(t, a.value().array().tanh().matrix(), "tanh",
                   [ia](int self) {
                     return [self, ia](Tape& tt) {
                       const Matrix& g = tt.node(self).grad;
                       const auto y = tt.node(self).value.array();
                       tt.node(ia).grad.array() +=
                           g.array() * (1.0 - y.square());
                     };
                   });
}

Var softplus(const Var& a) {
  Tape& t = a.tape();
  // Stable log(1 + e^x) = max(x, 0) + log1p(e^{-|x|}).
  Matrix y = a.value().unaryExpr([](double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  });
  const int ia = a.index();
  return make_node(t, std::move(y), "softplus", [ia](int self) {
    return [self, ia](Tape& tt) {
      const Matrix& g = tt.node(self).grad;
      const auto x = tt.node(ia).value.array();
      tt.node(ia).grad.array() += g.array() / (1.0 + (-x).exp());
    };
  });
}

Var log(const Var& a) {
  Tape& t = a.tape();
  const int ia = a.index();
  return make_node(t, a.value().array().log().matrix(), "log",
                   [ia](int self) {
                     return [self, ia](Tape& tt) {
                       const Matrix& g = tt.node(self).grad;
                       tt.node(ia).grad +=
                           g.cwiseQuotient(tt.node(ia).value);
                     };
                   });
}

Var exp(const Var& a) {
  Tape& t = a.tape();
  const int ia = a.index();
  return make_node(t, a.value().array().exp().matrix(), "exp",
                   [ia](int self) {
                     return [self, ia](Tape& tt) {
                       const Matrix& g = tt.node(self).grad;
                       tt.node(ia).grad +=
                           g.cwiseProduct(tt.node(self).value);
                     };
                   });
}

Var square(const Var& a) {
  Tape& t = a.tape();
  const int ia = a.index();
  return make_node(t, a.value().array().square().matrix(), "square",
                   [ia](int self) {
                     return [self, ia](Tape& tt) {
                       const Matrix& g = tt.node(self).grad;
                       tt.node(ia).grad +=
                           2.0 * g.cwiseProduct(tt.node(ia).value);
                     };
                   });
}

Var sqrt(const Var& a) {
  Tape& t = a.tape();
  const int ia = a.index();
  return make_node(t, a.value().array().sqrt().matrix(), "sqrt",
                   [ia](int self) {
                     return [self, ia](Tape& tt) {
                       const Matrix& g = tt.node(self).grad;
                       tt.node(ia).grad +=
                           0.5 * g.cwiseQuotient(tt.node(self).value);
                     };
                   });
}

Var sum(const Var& a) {
  Tape& t = a.tape();
  Matrix y(1, 1);
  y(0, 0) = a.value().sum();
  const int ia = a.index();
  return make_node(t, std::move(y), "sum", [ia](int self) {
    return [self, ia](Tape& tt) {
      tt.node(ia).grad.array() += tt.node(self).grad(0, 0);
    };
  });
}

}  // namespace factvae::ad
