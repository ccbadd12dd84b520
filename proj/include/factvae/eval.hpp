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

#ifndef FACTVAE_EVAL_HPP
#define FACTVAE_EVAL_HPP

#include <span>
#include <string>
#include <vector>

#include "factvae/data.hpp"
#include "factvae/model.hpp"
#include "factvae/rng.hpp"

namespace factvae {

enum class ReconMode { kMean, kSample };

/// Conditional reconstruction: fuses the experts of `observe`, takes the
/// posterior mean (kMean; consumes no randomness) or a reparameterized
/// draw (kSample), and returns the decoded mean for every group, observed
/// or not. Reads only the groups named in `observe`.
std::vector<Vector> reconstruct(const FactVaeModel& model,
                                const GroupedSample& sample,
                                std::span<const Index> observe, ReconMode mode,
                                SeededRng& rng);

/// Importance-weighted heldout log-likelihood over the sample's observed
/// groups: log (1/S) sum_s p(x_obs | z_s) p(z_s) / q(z_s | x_obs) with
/// z_s drawn from the fused posterior over all observed groups.
double heldout_ll(const FactVaeModel& model, const GroupedSample& sample,
                  int num_samples, SeededRng& rng);

/// G x K matrix of coupled-block column norms; an entry is exactly 0 iff
/// the column is exactly zero.
struct SparsityMatrix {
  std::vector<std::string> group_names;
  Matrix norms;
};

SparsityMatrix sparsity_matrix(const FactVaeModel& model);

/// Active-pattern mask at a relative threshold: entry (g, j) is active when
/// norms(g, j) > threshold_ratio * max(norms).
Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> active_pattern(
    const SparsityMatrix& matrix, double threshold_ratio);

/// Binary PGM (P5, maxval 255). Values are mapped affinely from
/// [min, max] to [0, 255] with round-half-up; constant images map to 0.
void write_pgm(const Matrix& image, const std::string& path);

/// CSV with header `group,z1,...,zK`, one row per group, 10 significant
/// digits.
void write_sparsity_csv(const SparsityMatrix& matrix, const std::string& path);

}  // namespace factvae

#endif  // FACTVAE_EVAL_HPP
