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

#include "factvae/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "factvae/textio.hpp"

namespace factvae {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

double log_density(const DiagGaussian& q, const Vector& z) {
  // All precisions are strictly positive for fused posteriors.
  const auto prec = q.precision.array();
  const auto resid = (z - q.mean).array();
  return 0.5 * (prec.log() - kLogTwoPi - prec * resid.square()).sum();
}

}  // namespace

std::vector<Vector> reconstruct(const FactVaeModel& model,
                                const GroupedSample& sample,
                                std::span<const Index> observe, ReconMode mode,
                                SeededRng& rng) {
  require(!observe.empty(), "reconstruct: observe set must be nonempty");
  const DiagGaussian posterior = encode(model, sample, observe);
  const Vector z = mode == ReconMode::kMean ? posterior.mean
                                            : reparam_sample(posterior, rng);
  std::vector<Vector> out;
  out.reserve(static_cast<size_t>(model.num_groups()));
  for (Index g = 0; g < model.num_groups(); ++g) {
    out.push_back(decode_group(model, g, z).mean);
  }
  return out;
}

double heldout_ll(const FactVaeModel& model, const GroupedSample& sample,
                  int num_samples, SeededRng& rng) {
  require(num_samples >= 1, "heldout_ll: need at least one sample");
  const std::vector<Index> observed = sample.observed();
  require(!observed.empty(), "heldout_ll: sample has no observed groups");
  const DiagGaussian posterior = encode(model, sample, observed);

  std::vector<double> log_weights;
  log_weights.reserve(static_cast<size_t>(num_samples));
  for (int s = 0; s < num_samples; ++s) {
    const Vector z = reparam_sample(posterior, rng);
    double log_w = -0.5 * (model.latent_dim() * kLogTwoPi + z.squaredNorm()) -
                   log_density(posterior, z);
    for (Index g : observed) {
      const ObsDistribution obs = decode_group(model, g, z);
      log_w += diag_gaussian_log_density(sample.value(g), obs.mean,
                                         obs.variance);
    }
    if (!std::isfinite(log_w)) {
      throw NumericalError("heldout_ll: non-finite importance weight");
    }
    log_weights.push_back(log_w);
  }

  const double max_w =
      *std::max_element(log_weights.begin(), log_weights.end());
  double acc = 0.0;
  for (double w : log_weights) acc += std::exp(w - max_w);
  return max_w + std::log(acc) - std::log(static_cast<double>(num_samples));
}

SparsityMatrix sparsity_matrix(const FactVaeModel& model) {
  SparsityMatrix out;
  out.norms.resize(model.num_groups(), model.latent_dim());
  for (Index g = 0; g < model.num_groups(); ++g) {
    out.group_names.push_back(model.group(g).name);
    const GroupNetworks& n = model.nets(g);
    for (Index j = 0; j < model.latent_dim(); ++j) {
      out.norms(g, j) = std::sqrt(n.latent_w.value.col(j).squaredNorm() +
                                  n.prec_w.value.row(j).squaredNorm());
    }
  }
  return out;
}

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> active_pattern(
    const SparsityMatrix& matrix, double threshold_ratio) {
  const double cutoff = threshold_ratio * matrix.norms.maxCoeff();
  return (matrix.norms.array() > cutoff).matrix();
}

void write_pgm(const Matrix& image, const std::string& path) {
  require(image.allFinite(), "write_pgm: image values must be finite");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot open '" + path + "' for writing");
  out << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
  const double lo = image.minCoeff();
  const double hi = image.maxCoeff();
  for (Index r = 0; r < image.rows(); ++r) {
    for (Index c = 0; c < image.cols(); ++c) {
      double level = 0.0;
      if (hi > lo) {
        level = std::floor((image(r, c) - lo) / (hi - lo) * 255.0 + 0.5);
      }
      level = std::min(255.0, std::max(0.0, level));
      out.put(static_cast<char>(static_cast<unsigned char>(level)));
    }
  }
  if (!out) throw FileError("failed writing image to '" + path + "'");
}

void write_sparsity_csv(const SparsityMatrix& matrix,
                        const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot open '" + path + "' for writing");
  out << "group";
  for (Index j = 0; j < matrix.norms.cols(); ++j) {
    out << ",z" << (j + 1);
  }
  out << "\n";
  for (Index g = 0; g < matrix.norms.rows(); ++g) {
    out << matrix.group_names[static_cast<size_t>(g)];
    for (Index j = 0; j < matrix.norms.cols(); ++j) {
      out << "," << format_double(matrix.norms(g, j), 10);
    }
    out << "\n";
  }
  if (!out) throw FileError("failed writing sparsity matrix to '" + path +
                            "'");
}

}  // namespace factvae
