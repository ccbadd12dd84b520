#include <doctest.h>

#include <cmath>
#include <vector>

#include "factvae/sparsity.hpp"
#include "test_util.hpp"

using factvae::FactVaeModel;
using factvae::Index;
using factvae::SeededRng;
using factvae::SparsityConfig;
using factvae::Vector;

namespace {

Vector random_vector(Index n, SeededRng& rng, double scale) {
  return Vector::NullaryExpr(n, [&](Index) {
    return scale * (2.0 * rng.uniform() - 1.0);
  });
}

double prox_objective(const Vector& u, const Vector& x, double eta,
                      double lambda) {
  return 0.5 * (u - x).squaredNorm() + eta * lambda * u.norm();
}

}  // namespace

TEST_SUITE("sparsity") {

TEST_CASE("penalty of an all-zero model is zero") {
  FactVaeModel m = test_util::make_model(3, 4, {5, 2}, 1);
  for (Index g = 0; g < m.num_groups(); ++g) {
    m.nets(g).latent_w.value.setZero();
    m.nets(g).prec_w.value.setZero();
  }
  CHECK(factvae::group_lasso_penalty(m, 2.0) == 0.0);
}

TEST_CASE("penalty of a single (3, 4) column at lambda 2 is 10") {
  // One group, one latent dimension, one observed dim and one hidden unit:
  // the coupled column is (latent_w(0,0), prec_w(0,0)) = (3, 4).
  FactVaeModel m(1, 1, {{"only", 1}});
  m.nets(0).latent_w.value(0, 0) = 3.0;
  m.nets(0).prec_w.value(0, 0) = 4.0;
  CHECK(factvae::group_lasso_penalty(m, 2.0) ==
        doctest::Approx(10.0).epsilon(1e-14));
}

TEST_CASE("penalty is homogeneous in lambda") {
  FactVaeModel m = test_util::make_model(4, 3, {5, 2}, 2);
  const double base = factvae::group_lasso_penalty(m, 1.0);
  SeededRng rng(3);
  for (int i = 0; i < 20; ++i) {
    const double lambda = 10.0 * rng.uniform();
    CHECK(factvae::group_lasso_penalty(m, lambda) ==
          doctest::Approx(lambda * base).epsilon(1e-12));
  }
  CHECK_THROWS_AS(factvae::group_lasso_penalty(m, -1.0),
                  std::invalid_argument);
}

TEST_CASE("prox zeroes a short column exactly") {
  Vector col(2);
  col << 0.3, -0.4;  // norm 0.5 <= 1
  const Vector out = factvae::prox_group_lasso(col, 1.0, 1.0);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 0.0);
}

TEST_CASE("prox shrinks a long column along itself") {
  Vector col(2);
  col << 3.0, 4.0;  // norm 5 shrinks to 4
  const Vector out = factvae::prox_group_lasso(col, 1.0, 1.0);
  CHECK(out[0] == doctest::Approx(2.4).epsilon(1e-14));
  CHECK(out[1] == doctest::Approx(3.2).epsilon(1e-14));

  // Dense grid search around the reported answer never improves the prox
  // objective.
  const double best = prox_objective(out, col, 1.0, 1.0);
  for (double d0 = -0.05; d0 <= 0.05; d0 += 0.005) {
    for (double d1 = -0.05; d1 <= 0.05; d1 += 0.005) {
      Vector u(2);
      u << out[0] + d0, out[1] + d1;
      CHECK(prox_objective(u, col, 1.0, 1.0) >= best - 1e-12);
    }
  }
}

TEST_CASE("prox with zero lambda is the identity") {
  SeededRng rng(4);
  const Vector col = random_vector(7, rng, 2.0);
  CHECK(factvae::prox_group_lasso(col, 0.5, 0.0) == col);
  CHECK(factvae::prox_group_lasso(Vector::Zero(3), 0.5, 0.0) ==
        Vector::Zero(3));
}

TEST_CASE("prox never increases the norm and is exact at the threshold") {
  SeededRng rng(5);
  for (int i = 0; i < 200; ++i) {
    Vector col = random_vector(5, rng, 3.0);
    const double eta = 0.01 + rng.uniform();
    const double lambda = 5.0 * rng.uniform();
    const Vector out = factvae::prox_group_lasso(col, eta, lambda);
    CHECK(out.norm() <= col.norm() + 1e-15);
    if (col.norm() <= eta * lambda) {
      CHECK(out.isZero(0.0));
    }
  }
}

TEST_CASE("prox output minimizes the objective against random perturbations") {
  SeededRng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.uniform_index(8));
    const Vector col = random_vector(n, rng, 2.0);
    const double eta = 0.05 + rng.uniform();
    const double lambda = 2.0 * rng.uniform();
    const Vector out = factvae::prox_group_lasso(col, eta, lambda);
    const double best = prox_objective(out, col, eta, lambda);
    for (int p = 0; p < 300; ++p) {
      const double scale = std::pow(10.0, -5.0 + 5.0 * rng.uniform());
      const Vector u = out + scale * random_vector(n, rng, 1.0);
      CHECK(prox_objective(u, col, eta, lambda) >= best - 1e-10);
    }
  }
}

TEST_CASE("prox is nonexpansive") {
  SeededRng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.uniform_index(6));
    const Vector x = random_vector(n, rng, 3.0);
    const Vector y = random_vector(n, rng, 3.0);
    const double eta = 0.05 + rng.uniform();
    const double lambda = 2.0 * rng.uniform();
    const Vector px = factvae::prox_group_lasso(x, eta, lambda);
    const Vector py = factvae::prox_group_lasso(y, eta, lambda);
    CHECK((px - py).norm() <= (x - y).norm() * (1.0 + 1e-12));
  }
}

TEST_CASE("prox_step with lambda 0 leaves the model bit-identical") {
  FactVaeModel m = test_util::make_model(4, 3, {5, 2}, 8);
  FactVaeModel copy = m;
  factvae::prox_step(m, SparsityConfig{0.0, 1e-3});
  for (Index g = 0; g < m.num_groups(); ++g) {
    CHECK(m.nets(g).latent_w.value == copy.nets(g).latent_w.value);
    CHECK(m.nets(g).prec_w.value == copy.nets(g).prec_w.value);
  }
}

TEST_CASE("prox_step with a huge lambda zeroes everything") {
  FactVaeModel m = test_util::make_model(4, 3, {5, 2}, 9);
  factvae::prox_step(m, SparsityConfig{1e6, 1e-3});
  SeededRng rng(10);
  for (Index g = 0; g < m.num_groups(); ++g) {
    CHECK(m.nets(g).latent_w.value.isZero(0.0));
    CHECK(m.nets(g).prec_w.value.isZero(0.0));
    // Decode is now constant in z.
    const Vector z1 = rng.normal_vector(4);
    const Vector z2 = rng.normal_vector(4);
    CHECK(decode_group(m, g, z1).mean == decode_group(m, g, z2).mean);
  }
  CHECK(factvae::group_lasso_penalty(m, 1.0) == 0.0);
}

TEST_CASE("prox_step shrinks every column norm by eta*lambda") {
  FactVaeModel m = test_util::make_model(4, 3, {5, 2}, 11);
  std::vector<double> before;
  for (Index g = 0; g < m.num_groups(); ++g) {
    auto block = factvae::sparsity_block(m, g);
    for (Index j = 0; j < block.cols(); ++j) {
      before.push_back(block.col_norm(j));
    }
  }
  const SparsityConfig config{3.0, 0.05};
  factvae::prox_step(m, config);
  size_t idx = 0;
  for (Index g = 0; g < m.num_groups(); ++g) {
    auto block = factvae::sparsity_block(m, g);
    for (Index j = 0; j < block.cols(); ++j, ++idx) {
      const double expected =
          std::max(0.0, before[idx] - config.eta * config.lambda);
      CHECK(block.col_norm(j) == doctest::Approx(expected).epsilon(1e-10));
    }
  }
  // Coupling invariant: both halves of a column are zero or nonzero
  // together after the step.
  for (Index g = 0; g < m.num_groups(); ++g) {
    const auto& n = m.nets(g);
    for (Index j = 0; j < m.latent_dim(); ++j) {
      const bool latent_zero = n.latent_w.value.col(j).isZero(0.0);
      const bool prec_zero = n.prec_w.value.row(j).isZero(0.0);
      CHECK(latent_zero == prec_zero);
    }
  }
}

}  // TEST_SUITE
