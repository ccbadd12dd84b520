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

#ifndef FACTVAE_MODEL_HPP
#define FACTVAE_MODEL_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "factvae/autodiff.hpp"
#include "factvae/gaussian.hpp"
#include "factvae/rng.hpp"
#include "factvae/types.hpp"

namespace factvae {

struct GroupSpec {
  std::string name;
  Index dim = 0;
};

/// One observation with possibly missing groups. `values[g]` is meaningful
/// only where `present[g]` is nonzero; missing slots may hold anything
/// (including NaN sentinels) and are never read.
struct GroupedSample {
  std::vector<Vector> values;
  std::vector<std::uint8_t> present;

  bool has(Index g) const { return present[static_cast<size_t>(g)] != 0; }
  const Vector& value(Index g) const;
  std::vector<Index> observed() const;
};

/// Per-group networks. The latent-to-group map (decoder side) and the
/// precision weights (encoder side) are the two halves of the group's
/// coupled sparsity block: column j of `latent_w` and row j of `prec_w`
/// are zeroed together by the proximal step.
struct GroupNetworks {
  ad::Parameter enc_w;       // H x p   encoder body
  ad::Parameter enc_b;       // H x 1
  ad::Parameter mean_w;      // K x H   posterior mean head
  ad::Parameter mean_b;      // K x 1
  ad::Parameter prec_w;      // K x H   posterior precision weights
  ad::Parameter latent_w;    // p x K   latent-to-group map
  ad::Parameter dec_w;       // H x p   decoder hidden layer
  ad::Parameter dec_b;       // H x 1
  ad::Parameter out_w;       // p x H   decoder output layer
  ad::Parameter out_b;       // p x 1
  ad::Parameter obs_logvar;  // p x 1, clamped to [-8, 4]

  GroupNetworks() = default;
  GroupNetworks(Index latent_dim, Index hidden_dim, Index group_dim);
};

/// Limits for the learned per-dimension observation log-variance.
inline constexpr double kObsLogVarMin = -8.0;
inline constexpr double kObsLogVarMax = 4.0;

class FactVaeModel {
 public:
  FactVaeModel(Index latent_dim, Index hidden_dim,
               std::vector<GroupSpec> groups);

  /// Random initialization: dense body/head weights N(0, 1/fan_in), the
  /// coupled-block matrices N(0, 0.1^2), biases zero, observation
  /// log-variances -4. Draw order is fixed (groups in order; per group
  /// enc_w, mean_w, prec_w, latent_w, dec_w, out_w; each row-major).
  void init_params(SeededRng& rng);

  Index latent_dim() const { return latent_dim_; }
  Index hidden_dim() const { return hidden_dim_; }
  Index num_groups() const { return static_cast<Index>(groups_.size()); }
  const std::vector<GroupSpec>& groups() const { return groups_; }
  const GroupSpec& group(Index g) const { return groups_[static_cast<size_t>(g)]; }
  Index group_index(const std::string& name) const;  // -1 if unknown

  GroupNetworks& nets(Index g) { return nets_[static_cast<size_t>(g)]; }
  const GroupNetworks& nets(Index g) const { return nets_[static_cast<size_t>(g)]; }

 private:
  Index latent_dim_;
  Index hidden_dim_;
  std::vector<GroupSpec> groups_;
  std::vector<GroupNetworks> nets_;
};

struct ObsDistribution {
  Vector mean;
  Vector variance;
};

/// Expert posterior for one group: mean head over the encoder body, and
/// precision |prec_w . body| (entries are exactly 0 where a prec_w row is
/// zero, marking latent dimensions this group says nothing about).
DiagGaussian encode_group(const FactVaeModel& model, Index g, const Vector& x);

/// Product-of-experts posterior over the inference subset (prior included).
DiagGaussian encode(const FactVaeModel& model, const GroupedSample& sample,
                    std::span<const Index> infer);

/// Group observation distribution N(out(tanh(dec(latent_w z))), exp(obs_logvar)).
ObsDistribution decode_group(const FactVaeModel& model, Index g,
                             const Vector& z);

// ---- collapsed ELBO ---------------------------------------------------

/// Parameter leaves for one group bound on a tape (see bind_parameters).
struct GroupVars {
  ad::Var enc_w, enc_b, mean_w, mean_b, prec_w;
  ad::Var latent_w, dec_w, dec_b, out_w, out_b, obs_logvar;
};

/// Binds every parameter of every group once; backward() accumulates into
/// the model's gradient buffers.
std::vector<GroupVars> bind_parameters(ad::Tape& tape, FactVaeModel& model);

/// Same graph leaves as constants (no gradient flow); for evaluation.
std::vector<GroupVars> bind_snapshot(ad::Tape& tape, const FactVaeModel& model);

/// Builds the per-sample objective on the tape:
///   (1/S) sum_s sum_{g in observed} log N(x_g; decode_g(z_s))
///     - KL(q_infer || N(0, I))
/// with z_s reparameterized from the fused posterior over `infer`.
/// Consumes S * K normals from `rng`. The network-parameter prior is NOT
/// included; see log_theta_prior_node.
ad::Var elbo_sample_node(ad::Tape& tape, const std::vector<GroupVars>& vars,
                         const FactVaeModel& model, const GroupedSample& sample,
                         std::span<const Index> infer,
                         std::span<const Index> observed, SeededRng& rng,
                         int mc_samples);

/// -1/2 ||theta||^2 over body and head weights/biases of every group
/// (the coupled blocks and the observation log-variances are excluded).
/// Builds on the tape the vars were bound to.
ad::Var log_theta_prior_node(const std::vector<GroupVars>& vars);

/// The collapsed objective without the group-lasso penalty, for one sample.
/// Deterministic given the rng state; S = mc_samples.
double elbo_tilde(const FactVaeModel& model, const GroupedSample& sample,
                  std::span<const Index> infer,
                  std::span<const Index> observed, SeededRng& rng,
                  int mc_samples);

// ---- serialization ------------------------------------------------------

/// Text format, value-exact round trip: header line FACTVAE1, key-value
/// lines for the dimensions and group specs, then one labeled block per
/// matrix with 17-significant-digit decimals, row-major.
void save_model(const FactVaeModel& model, const std::string& path);
FactVaeModel load_model(const std::string& path);

}  // namespace factvae

#endif  // FACTVAE_MODEL_HPP
