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

#include "factvae/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <utility>

#include "factvae/sparsity.hpp"
#include "factvae/textio.hpp"

namespace factvae {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void validate(const TrainConfig& c) {
  require(c.lambda >= 0.0, "train: lambda must be >= 0");
  require(c.learning_rate > 0.0, "train: learning rate must be > 0");
  require(c.eta > 0.0, "train: eta must be > 0");
  require(c.epochs >= 0, "train: epochs must be >= 0");
  require(c.minibatch >= 0, "train: minibatch must be >= 1 (or 0 for auto)");
  require(c.q_keep > 0.0 && c.q_keep <= 1.0,
          "train: q_keep must be in (0, 1]");
  require(c.mc_samples >= 1, "train: mc_samples must be >= 1");
}

std::vector<ad::Parameter*> theta_parameters(FactVaeModel& model) {
  std::vector<ad::Parameter*> params;
  for (Index g = 0; g < model.num_groups(); ++g) {
    GroupNetworks& n = model.nets(g);
    for (ad::Parameter* p : {&n.enc_w, &n.enc_b, &n.mean_w, &n.mean_b,
                             &n.dec_w, &n.dec_b, &n.out_w, &n.out_b,
                             &n.obs_logvar}) {
      params.push_back(p);
    }
  }
  return params;
}

std::vector<ad::Parameter*> block_parameters(FactVaeModel& model) {
  std::vector<ad::Parameter*> params;
  for (Index g = 0; g < model.num_groups(); ++g) {
    GroupNetworks& n = model.nets(g);
    params.push_back(&n.latent_w);
    params.push_back(&n.prec_w);
  }
  return params;
}

double zero_column_fraction(FactVaeModel& model) {
  Index zero = 0;
  for (Index g = 0; g < model.num_groups(); ++g) {
    SparsityBlock block = sparsity_block(model, g);
    for (Index j = 0; j < block.cols(); ++j) {
      if (block.col_norm(j) == 0.0) ++zero;
    }
  }
  return static_cast<double>(zero) /
         static_cast<double>(model.num_groups() * model.latent_dim());
}

}  // namespace

std::vector<Index> sample_inference_subset(std::span<const Index> observed,
                                           double q_keep, SeededRng& rng) {
  require(!observed.empty(),
          "sample_inference_subset: observed set must be nonempty");
  require(q_keep > 0.0 && q_keep <= 1.0,
          "sample_inference_subset: q_keep must be in (0, 1]");
  std::vector<Index> kept;
  do {
    kept.clear();
    for (Index g : observed) {
      if (rng.uniform() < q_keep) kept.push_back(g);
    }
  } while (kept.empty());
  return kept;
}

AdamState::AdamState(std::span<ad::Parameter* const> params) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const ad::Parameter* p : params) {
    m_.push_back(Matrix::Zero(p->rows(), p->cols()));
    v_.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
}

void adam_step(std::span<ad::Parameter* const> params, AdamState& state,
               double learning_rate) {
  require(params.size() == state.m_.size(),
          "adam_step: state does not match the parameter list");
  ++state.step_;
  const double bias1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step_));
  const double bias2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step_));
  for (size_t i = 0; i < params.size(); ++i) {
    ad::Parameter& p = *params[i];
    Matrix& m = state.m_[i];
    Matrix& v = state.v_[i];
    m = kBeta1 * m + (1.0 - kBeta1) * p.grad;
    v = kBeta2 * v.array() + (1.0 - kBeta2) * p.grad.array().square();
    p.value.array() += learning_rate * (m.array() / bias1) /
                       ((v.array() / bias2).sqrt() + kAdamEps);
  }
}

TrainHistory train(const GroupedDataset& dataset, FactVaeModel& model,
                   const TrainConfig& config) {
  validate(config);
  require(static_cast<Index>(dataset.specs.size()) == model.num_groups(),
          "train: dataset group count does not match model");
  for (Index g = 0; g < model.num_groups(); ++g) {
    require(dataset.specs[static_cast<size_t>(g)].dim == model.group(g).dim,
            "train: dataset group dims do not match model");
  }
  require(!dataset.samples.empty(), "train: dataset is empty");

  SeededRng rng = SeededRng::derive(config.seed, 1);
  const std::vector<ad::Parameter*> theta = theta_parameters(model);
  const std::vector<ad::Parameter*> blocks = block_parameters(model);
  AdamState adam(theta);
  const SparsityConfig prox_config{config.lambda, config.eta};

  const size_t n = dataset.samples.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  const size_t batch =
      config.minibatch > 0
          ? static_cast<size_t>(config.minibatch)
          : std::min<size_t>(32, (n + 63) / 64 > 0 ? (n + 63) / 64 : 1);

  TrainHistory history;
  ad::Tape tape;
  long iteration = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    // Fisher-Yates reshuffle; consumes n - 1 draws.
    for (size_t i = n - 1; i >= 1; --i) {
      const size_t j = rng.uniform_index(i + 1);
      std::swap(order[i], order[j]);
    }

    double epoch_objective = 0.0;
    long epoch_iterations = 0;
    for (size_t start = 0; start < n; start += batch) {
      const size_t stop = std::min(n, start + batch);
      ++iteration;
      try {
        tape.clear();
        const std::vector<GroupVars> vars = bind_parameters(tape, model);
        ad::Var core_sum;
        for (size_t k = start; k < stop; ++k) {
          const GroupedSample& sample = dataset.samples[order[k]];
          const std::vector<Index> observed = sample.observed();
          const std::vector<Index> infer =
              sample_inference_subset(observed, config.q_keep, rng);
          ad::Var core = elbo_sample_node(tape, vars, model, sample, infer,
                                          observed, rng, config.mc_samples);
          core_sum = (k == start) ? core : ad::add(core_sum, core);
        }
        // The parameter prior belongs to the dataset objective once, so its
        // per-iteration weight is 1/N rather than the per-sample weight
        // elbo_tilde reports; otherwise it swamps the data terms.
        ad::Var objective = ad::add(
            ad::scale(core_sum, 1.0 / static_cast<double>(stop - start)),
            ad::scale(log_theta_prior_node(vars),
                      1.0 / static_cast<double>(n)));

        for (ad::Parameter* p : theta) p->zero_grad();
        for (ad::Parameter* p : blocks) p->zero_grad();
        tape.backward(objective);

        adam_step(theta, adam, config.learning_rate);
        for (Index g = 0; g < model.num_groups(); ++g) {
          auto& lv = model.nets(g).obs_logvar.value;
          lv = lv.cwiseMax(kObsLogVarMin).cwiseMin(kObsLogVarMax);
        }
        for (ad::Parameter* p : blocks) p->value += config.eta * p->grad;
        prox_step(model, prox_config);

        epoch_objective += objective.value()(0, 0);
        ++epoch_iterations;
      } catch (const NumericalError& e) {
        throw NumericalError("iteration " + std::to_string(iteration) + ": " +
                             e.what());
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.mean_elbo = epoch_objective / static_cast<double>(epoch_iterations);
    record.penalty = group_lasso_penalty(model, config.lambda);
    record.zero_col_fraction = zero_column_fraction(model);
    history.epochs.push_back(record);
  }
  return history;
}

void write_history_csv(const TrainHistory& history, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot open '" + path + "' for writing");
  out << "epoch,elbo_tilde,penalty,zero_col_fraction\n";
  for (const EpochRecord& r : history.epochs) {
    out << r.epoch << "," << format_double(r.mean_elbo, 10) << ","
        << format_double(r.penalty, 10) << ","
        << format_double(r.zero_col_fraction, 10) << "\n";
  }
  if (!out) throw FileError("failed writing history to '" + path + "'");
}

}  // namespace factvae
