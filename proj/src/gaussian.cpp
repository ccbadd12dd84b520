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

#include "factvae/gaussian.hpp"

#include <cmath>
#include <numbers>

namespace factvae {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;  // ln(2*pi)

void require_proper(const DiagGaussian& q, const char* op) {
  require(q.mean.size() == q.precision.size(),
          std::string(op) + ": mean/precision length mismatch");
  require((q.precision.array() > 0.0).all(),
          std::string(op) + ": requires strictly positive precisions");
}

}  // namespace

DiagGaussian poe_fuse(std::span<const DiagGaussian> experts, Index dim) {
  require(dim >= 1, "poe_fuse: dimension must be positive");
  Vector precision = Vector::Ones(dim);
  Vector weighted_mean = Vector::Zero(dim);
  for (const DiagGaussian& e : experts) {
    require(e.mean.size() == dim && e.precision.size() == dim,
            "poe_fuse: dimension mismatch among experts");
    require((e.precision.array() >= 0.0).all(),
            "poe_fuse: expert precisions must be nonnegative");
    precision += e.precision;
    weighted_mean.array() += e.precision.array() * e.mean.array();
  }
  DiagGaussian fused;
  fused.mean = weighted_mean.array() / precision.array();
  fused.precision = std::move(precision);
  return fused;
}

double kl_to_standard_normal(const DiagGaussian& q) {
  require_proper(q, "kl_to_standard_normal");
  const auto prec = q.precision.array();
  return 0.5 * (prec.inverse() + q.mean.array().square() - 1.0 + prec.log())
                   .sum();
}

double entropy(const DiagGaussian& q) {
  require_proper(q, "entropy");
  const double log_two_pi_e = kLogTwoPi + 1.0;
  return 0.5 * (log_two_pi_e - q.precision.array().log()).sum();
}

Vector reparam_sample(const DiagGaussian& q, SeededRng& rng) {
  require_proper(q, "reparam_sample");
  const Vector eps = rng.normal_vector(q.dim());
  return q.mean.array() + eps.array() / q.precision.array().sqrt();
}

double diag_gaussian_log_density(const Vector& x, const Vector& mean,
                                 const Vector& variance) {
  require(x.size() == mean.size() && x.size() == variance.size(),
          "diag_gaussian_log_density: length mismatch");
  require((variance.array() > 0.0).all(),
          "diag_gaussian_log_density: variance must be positive");
  const auto resid = (x - mean).array();
  return -0.5 * (kLogTwoPi + variance.array().log() +
                 resid.square() / variance.array())
                    .sum();
}

}  // namespace factvae
