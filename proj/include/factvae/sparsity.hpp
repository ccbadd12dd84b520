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

#ifndef FACTVAE_SPARSITY_HPP
#define FACTVAE_SPARSITY_HPP

#include "factvae/model.hpp"
#include "factvae/types.hpp"

namespace factvae {

struct SparsityConfig {
  double lambda = 1.0;  // group-lasso weight, >= 0
  double eta = 1e-3;    // proximal step size, > 0
};

/// Write-through view of a group's coupled sparsity block: the
/// (p + H) x K stack of the latent-to-group map over the transposed
/// precision weights. Column j addresses latent_w column j together with
/// prec_w row j, so column edits hit both matrices.
class SparsityBlock {
 public:
  SparsityBlock(Matrix& latent_w, Matrix& prec_w);

  Index rows() const { return latent_w_.rows() + prec_w_.cols(); }
  Index cols() const { return latent_w_.cols(); }

  double& operator()(Index i, Index j);
  double operator()(Index i, Index j) const;

  double col_norm(Index j) const;
  void scale_col(Index j, double factor);
  void zero_col(Index j);  // writes exact 0.0 into both halves

  Vector col(Index j) const;
  void set_col(Index j, const Vector& v);
  Matrix matrix() const;  // materialized copy

 private:
  Matrix& latent_w_;  // p x K
  Matrix& prec_w_;    // K x H
};

SparsityBlock sparsity_block(FactVaeModel& model, Index g);

/// lambda * sum_g sum_j ||block_g col j||_2.
double group_lasso_penalty(const FactVaeModel& model, double lambda);

/// Block soft threshold: the exact minimizer of
/// 1/2 ||u - x||^2 + eta*lambda*||u||_2. Columns with norm <= eta*lambda
/// map to exact zeros; otherwise the column is shrunk along itself.
Vector prox_group_lasso(const Vector& column, double eta, double lambda);

/// Applies the proximal operator to every column of every group's coupled
/// block, in place.
void prox_step(FactVaeModel& model, const SparsityConfig& config);

}  // namespace factvae

#endif  // FACTVAE_SPARSITY_HPP
