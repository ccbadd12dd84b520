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

#ifndef FACTVAE_TRAINER_HPP
#define FACTVAE_TRAINER_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "factvae/data.hpp"
#include "factvae/model.hpp"
#include "factvae/rng.hpp"

namespace factvae {

struct TrainConfig {
  double lambda = 1.0;        // group-lasso weight
  double learning_rate = 1e-3;  // Adam step on the network parameters
  double eta = 1e-4;          // plain gradient + prox step on the coupled blocks
  int epochs = 200;
  // 0 picks ceil(N / 64) clamped to [1, 32], so the per-epoch iteration
  // count stays useful from desk-scale datasets down to a few dozen
  // samples. Explicit values are used as given.
  int minibatch = 0;
  double q_keep = 0.5;        // group-dropout keep probability, in (0, 1]
  int mc_samples = 1;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  int epoch = 0;                  // 1-based
  double mean_elbo = 0.0;         // mean minibatch objective over the epoch
  double penalty = 0.0;           // group-lasso penalty at epoch end
  double zero_col_fraction = 0.0; // exactly-zero coupled columns / (G*K)
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

/// Keeps each observed group independently with probability q_keep and
/// resamples the whole mask until the result is nonempty, so the output is
/// distributed as the keep-mask conditioned on being nonempty.
std::vector<Index> sample_inference_subset(std::span<const Index> observed,
                                           double q_keep, SeededRng& rng);

/// First/second moment buffers for adam_step, one slot per parameter.
class AdamState {
 public:
  explicit AdamState(std::span<ad::Parameter* const> params);

  long step_count() const { return step_; }

 private:
  friend void adam_step(std::span<ad::Parameter* const> params,
                        AdamState& state, double learning_rate);
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long step_ = 0;
};

/// Ascending adaptive-moment update (beta1 0.9, beta2 0.999, eps 1e-8,
/// bias-corrected) using each parameter's gradient accumulator:
///   p.value += lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(std::span<ad::Parameter* const> params, AdamState& state,
               double learning_rate);

/// Collapsed stochastic variational inference:
/// per iteration, the mean data objective over a minibatch (per-sample
/// inference subsets drawn with group dropout, likelihood over each
/// sample's observed groups) plus the parameter prior at dataset weight
/// 1/N, an Adam ascent step on the network parameters, a plain gradient
/// ascent step of size eta on the coupled blocks, then the proximal step.
///
/// Deterministic given config.seed (internal stream: derive(seed, 1)).
/// Throws NumericalError naming the iteration if the objective goes
/// non-finite.
TrainHistory train(const GroupedDataset& dataset, FactVaeModel& model,
                   const TrainConfig& config);

/// CSV: epoch,elbo_tilde,penalty,zero_col_fraction (10 significant digits).
void write_history_csv(const TrainHistory& history, const std::string& path);

}  // namespace factvae

#endif  // FACTVAE_TRAINER_HPP
