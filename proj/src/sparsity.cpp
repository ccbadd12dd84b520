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

#include "factvae/sparsity.hpp"

#include <cmath>

namespace factvae {

SparsityBlock::SparsityBlock(Matrix& latent_w, Matrix& prec_w)
    : latent_w_(latent_w), prec_w_(prec_w) {
  require(latent_w_.cols() == prec_w_.rows(),
          "SparsityBlock: latent_w cols must equal prec_w rows");
}

double& SparsityBlock::operator()(Index i, Index j) {
  const Index p = latent_w_.rows();
  return i < p ? latent_w_(i, j) : prec_w_(j, i - p);
}

double SparsityBlock::operator()(Index i, Index j) const {
  const Index p = latent_w_.rows();
  return i < p ? latent_w_(i, j) : prec_w_(j, i - p);
}

double SparsityBlock::col_norm(Index j) const {
  return std::sqrt(latent_w_.col(j).squaredNorm() +
                   prec_w_.row(j).squaredNorm());
}

void SparsityBlock::scale_col(Index j, double factor) {
  latent_w_.col(j) *= factor;
  prec_w_.row(j) *= factor;
}

void SparsityBlock::zero_col(Index j) {
  latent_w_.col(j).setZero();
  prec_w_.row(j).setZero();
}

Vector SparsityBlock::col(Index j) const {
  Vector out(rows());
  for (Index i = 0; i < rows(); ++i) out[i] = (*this)(i, j);
  return out;
}

void SparsityBlock::set_col(Index j, const Vector& v) {
  require(v.size() == rows(), "SparsityBlock: column length mismatch");
  for (Index i = 0; i < rows(); ++i) (*this)(i, j) = v[i];
}

Matrix SparsityBlock::matrix() const {
  Matrix out(rows(), cols());
  for (Index j = 0; j < cols(); ++j) {
    for (Index i = 0; i < rows(); ++i) out(i, j) = (*this)(i, j);
  }
  return out;
}

SparsityBlock sparsity_block(FactVaeModel& model, Index g) {
  require(g >= 0 && g < model.num_groups(), "sparsity_block: bad group index");
  GroupNetworks& n = model.nets(g);
  return SparsityBlock(n.latent_w.value, n.prec_w.value);
}

double group_lasso_penalty(const FactVaeModel& model, double lambda) {
  require(lambda >= 0.0, "group_lasso_penalty: lambda must be nonnegative");
  double total = 0.0;
  for (Index g = 0; g < model.num_groups(); ++g) {
    const GroupNetworks& n = model.nets(g);
    for (Index j = 0; j < model.latent_dim(); ++j) {
      total += std::sqrt(n.latent_w.value.col(j).squaredNorm() +
                         n.prec_w.value.row(j).squaredNorm());
    }
  }
  return lambda * total;
}

Vector prox_group_lasso(const Vector& column, double eta, double lambda) {
  require(eta > 0.0, "prox_group_lasso: eta must be positive");
  require(lambda >= 0.0, "prox_group_lasso: lambda must be nonnegative");
  const double norm = column.norm();
  const double threshold = eta * lambda;
  if (norm <= threshold) return Vector::Zero(column.size());
  return column * ((norm - threshold) / norm);
}

void prox_step(FactVaeModel& model, const SparsityConfig& config) {
  require(config.eta > 0.0, "prox_step: eta must be positive");
  require(config.lambda >= 0.0, "prox_step: lambda must be nonnegative");
  const double threshold = config.eta * config.lambda;
  for (Index g = 0; g < model.num_groups(); ++g) {
    SparsityBlock block = sparsity_block(model, g);
    for (Index j = 0; j < block.cols(); ++j) {
      const double norm = block.col_norm(j);
      if (norm <= threshold) {
        block.zero_col(j);
      } else {
        block.scale_col(j, (norm - threshold) / norm);
      }
    }
  }
}

}  // namespace factvae
