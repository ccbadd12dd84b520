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

#ifndef FACTVAE_GAUSSIAN_HPP
#define FACTVAE_GAUSSIAN_HPP

#include <span>

#include "factvae/rng.hpp"
#include "factvae/types.hpp"

namespace factvae {

/// Diagonal Gaussian in natural (mean, precision) form.
///
/// Precision entries are nonnegative; an entry of exactly 0 marks a
/// dimension on which the distribution is uninformative (infinite variance).
struct DiagGaussian {
  Vector mean;
  Vector precision;

  Index dim() const { return mean.size(); }
};

/// Product-of-experts fusion of diagonal Gaussians with the standard-normal
/// prior folded in as an always-present expert (mean 0, precision 1):
///
///   precision = 1 + sum_g precision_g
///   mean      = sum_g (precision_g . mean_g) / precision
///
/// `dim` fixes the dimension (needed for an empty expert list, where the
/// result is the prior itself). Fused precision is >= 1 per dimension.
DiagGaussian poe_fuse(std::span<const DiagGaussian> experts, Index dim);

/// KL(q || N(0, I)) = 1/2 sum_k (1/prec_k + mean_k^2 - 1 + ln prec_k).
/// Requires strictly positive precisions.
double kl_to_standard_normal(const DiagGaussian& q);

/// Differential entropy 1/2 sum_k ln(2 pi e / prec_k).
/// Requires strictly positive precisions.
double entropy(const DiagGaussian& q);

/// Reparameterized draw z = mean + eps / sqrt(precision), eps ~ N(0, I).
/// Consumes dim() normals from `rng`. Requires strictly positive precisions.
Vector reparam_sample(const DiagGaussian& q, SeededRng& rng);

/// log N(x; mean, var) with diagonal variance, summed over dimensions.
double diag_gaussian_log_density(const Vector& x, const Vector& mean,
                                 const Vector& variance);

}  // namespace factvae

#endif  // FACTVAE_GAUSSIAN_HPP
