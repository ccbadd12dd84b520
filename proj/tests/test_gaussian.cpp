#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "factvae/gaussian.hpp"
#include "oracles.hpp"

using factvae::DiagGaussian;
using factvae::Index;
using factvae::SeededRng;
using factvae::Vector;

namespace {

DiagGaussian make(std::initializer_list<double> mean,
                  std::initializer_list<double> precision) {
  DiagGaussian g;
  g.mean = Eigen::Map<const Vector>(mean.begin(),
                                    static_cast<Index>(mean.size()));
  g.precision = Eigen::Map<const Vector>(
      precision.begin(), static_cast<Index>(precision.size()));
  return g;
}

std::vector<DiagGaussian> random_experts(SeededRng& rng, int count, Index dim,
                                         bool allow_zero_precision = true) {
  std::vector<DiagGaussian> experts;
  for (int e = 0; e < count; ++e) {
    DiagGaussian g;
    g.mean = Vector::NullaryExpr(dim, [&](Index) {
      return 6.0 * rng.uniform() - 3.0;
    });
    g.precision = Vector::NullaryExpr(dim, [&](Index) {
      const double u = rng.uniform();
      if (allow_zero_precision && u < 0.1) return 0.0;
      return 5.0 * rng.uniform() + 1e-3;
    });
    experts.push_back(std::move(g));
  }
  return experts;
}

}  // namespace

TEST_SUITE("gaussian") {

TEST_CASE("poe_fuse of nothing is the prior") {
  const DiagGaussian fused = factvae::poe_fuse({}, 2);
  CHECK(fused.mean.isZero(0.0));
  CHECK(fused.precision == Vector::Ones(2));
}

TEST_CASE("poe_fuse single expert against grid integration") {
  const DiagGaussian expert = make({2.0}, {1.0});
  const std::vector<DiagGaussian> experts{expert};
  const DiagGaussian fused = factvae::poe_fuse(experts, 1);
  CHECK(fused.precision[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fused.mean[0] == doctest::Approx(1.0).epsilon(1e-12));

  const auto grid = oracles::product_moments_grid(experts);
  CHECK(std::abs(fused.mean[0] - grid.mean) < 1e-6);
  CHECK(std::abs(1.0 / fused.precision[0] - grid.variance) < 1e-6);
}

TEST_CASE("poe_fuse two experts against grid integration") {
  const std::vector<DiagGaussian> experts{make({1.0}, {3.0}),
                                          make({-1.0}, {1.0})};
  const DiagGaussian fused = factvae::poe_fuse(experts, 1);
  CHECK(fused.precision[0] == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(fused.mean[0] == doctest::Approx(0.4).epsilon(1e-12));

  const auto grid = oracles::product_moments_grid(experts);
  CHECK(std::abs(fused.mean[0] - grid.mean) < 1e-6);
  CHECK(std::abs(1.0 / fused.precision[0] - grid.variance) < 1e-6);
}

TEST_CASE("poe_fuse matches the grid oracle on random 1-D expert sets") {
  SeededRng rng(101);
  for (int trial = 0; trial < 25; ++trial) {
    const int count = static_cast<int>(rng.uniform_index(5));  // up to 4
    const auto experts = random_experts(rng, count, 1);
    const DiagGaussian fused = factvae::poe_fuse(experts, 1);
    const auto grid = oracles::product_moments_grid(experts);
    CHECK(std::abs(fused.mean[0] - grid.mean) < 1e-6);
    CHECK(std::abs(1.0 / fused.precision[0] - grid.variance) < 1e-6);
  }
}

TEST_CASE("poe_fuse is permutation invariant") {
  SeededRng rng(55);
  auto experts = random_experts(rng, 4, 3);
  const DiagGaussian a = factvae::poe_fuse(experts, 3);
  std::reverse(experts.begin(), experts.end());
  const DiagGaussian b = factvae::poe_fuse(experts, 3);
  CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a.precision - b.precision).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("a zero-precision expert leaves the prior untouched") {
  const std::vector<DiagGaussian> experts{make({7.0, 1.0}, {0.0, 2.0})};
  const DiagGaussian fused = factvae::poe_fuse(experts, 2);
  CHECK(fused.precision[0] == 1.0);
  CHECK(fused.mean[0] == 0.0);
  CHECK(fused.precision[1] == 3.0);
}

TEST_CASE("appending experts never increases fused variance") {
  SeededRng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const auto experts = random_experts(rng, 5, 2);
    std::vector<DiagGaussian> prefix;
    Vector prev = factvae::poe_fuse(prefix, 2).precision;
    for (const auto& e : experts) {
      prefix.push_back(e);
      const Vector next = factvae::poe_fuse(prefix, 2).precision;
      CHECK((next.array() >= prev.array()).all());
      prev = next;
    }
  }
}

TEST_CASE("poe_fuse rejects mismatched dimensions") {
  const std::vector<DiagGaussian> experts{make({0.0, 0.0}, {1.0, 1.0})};
  CHECK_THROWS_AS(factvae::poe_fuse(experts, 3), std::invalid_argument);
}

TEST_CASE("kl examples") {
  CHECK(factvae::kl_to_standard_normal(make({0.0, 0.0}, {1.0, 1.0})) ==
        doctest::Approx(0.0).epsilon(1e-15));
  CHECK(factvae::kl_to_standard_normal(make({1.0}, {1.0})) ==
        doctest::Approx(0.5).epsilon(1e-12));
  // 1/2 (0.25 - 1 - ln 0.25)
  CHECK(factvae::kl_to_standard_normal(make({0.0}, {4.0})) ==
        doctest::Approx(0.3181471805599453).epsilon(1e-12));
}

TEST_CASE("kl matches Monte Carlo within 3 standard errors") {
  SeededRng rng(303);
  const DiagGaussian cases[] = {make({1.0}, {1.0}), make({0.0}, {4.0}),
                                make({-0.7, 1.3}, {0.5, 2.5})};
  for (const DiagGaussian& q : cases) {
    const auto mc = oracles::mc_kl_standard_normal(q, 1000000, rng);
    CHECK(std::abs(factvae::kl_to_standard_normal(q) - mc.value) <
          3.0 * mc.std_error);
  }
}

TEST_CASE("kl is zero only at the standard normal") {
  CHECK(factvae::kl_to_standard_normal(make({0.0, 0.0, 0.0},
                                            {1.0, 1.0, 1.0})) < 1e-12);
  SeededRng rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    DiagGaussian q = make({0.0, 0.0}, {1.0, 1.0});
    q.mean[0] = 2.0 * rng.uniform() - 1.0;
    q.precision[1] = 0.5 + rng.uniform();
    const bool standard = q.mean.isZero(0.0) &&
                          (q.precision.array() == 1.0).all();
    if (!standard) {
      CHECK(factvae::kl_to_standard_normal(q) > 1e-12);
    }
  }
}

TEST_CASE("kl rejects zero precision") {
  CHECK_THROWS_AS(factvae::kl_to_standard_normal(make({0.0}, {0.0})),
                  std::invalid_argument);
}

TEST_CASE("entropy examples") {
  CHECK(factvae::entropy(make({0.0}, {1.0})) ==
        doctest::Approx(1.4189385332046727).epsilon(1e-12));
  CHECK(factvae::entropy(make({3.0, -2.0}, {1.0, 1.0})) ==
        doctest::Approx(2.0 * 1.4189385332046727).epsilon(1e-12));
  CHECK_THROWS_AS(factvae::entropy(make({0.0}, {0.0})),
                  std::invalid_argument);
}

TEST_CASE("entropy matches Monte Carlo within 3 standard errors") {
  SeededRng rng(606);
  const DiagGaussian q = make({0.5, -1.0}, {2.0, 0.3});
  const auto mc = oracles::mc_entropy(q, 1000000, rng);
  CHECK(std::abs(factvae::entropy(q) - mc.value) < 3.0 * mc.std_error);
}

TEST_CASE("fusion entropy decreases as experts arrive") {
  SeededRng rng(707);
  for (int trial = 0; trial < 50; ++trial) {
    const auto experts = random_experts(rng, 4, 3);
    std::vector<DiagGaussian> prefix;
    double prev = factvae::entropy(factvae::poe_fuse(prefix, 3));
    for (const auto& e : experts) {
      prefix.push_back(e);
      const double next = factvae::entropy(factvae::poe_fuse(prefix, 3));
      CHECK(next <= prev);
      prev = next;
    }
  }
}

TEST_CASE("reparam_sample concentrates at the mean for huge precision") {
  SeededRng rng(808);
  const DiagGaussian q = make({2.5, -1.5}, {1e12, 1e12});
  const Vector z = factvae::reparam_sample(q, rng);
  CHECK((z - q.mean).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("reparam_sample is deterministic given the seed") {
  const DiagGaussian q = make({0.3, 0.7}, {2.0, 5.0});
  SeededRng a(99), b(99);
  CHECK(factvae::reparam_sample(q, a) == factvae::reparam_sample(q, b));
}

TEST_CASE("reparam_sample empirical moments match within 3 standard errors") {
  const DiagGaussian q = make({1.2}, {4.0});  // sigma^2 = 0.25
  SeededRng rng(909);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = factvae::reparam_sample(q, rng)[0];
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  const double sigma_sq = 0.25;
  CHECK(std::abs(mean - 1.2) <
        3.0 * std::sqrt(sigma_sq / static_cast<double>(n)));
  CHECK(std::abs(var - sigma_sq) <
        3.0 * sigma_sq * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST_CASE("reparam_sample rejects zero precision") {
  SeededRng rng(1);
  CHECK_THROWS_AS(factvae::reparam_sample(make({0.0}, {0.0}), rng),
                  std::invalid_argument);
}

}  // TEST_SUITE
