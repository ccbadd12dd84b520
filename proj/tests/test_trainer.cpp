#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <map>
#include <vector>

#include "factvae/sparsity.hpp"
#include "factvae/trainer.hpp"
#include "test_util.hpp"

using factvae::BarsConfig;
using factvae::FactVaeModel;
using factvae::GroupedDataset;
using factvae::Index;
using factvae::SeededRng;
using factvae::TrainConfig;
using factvae::TrainHistory;
using factvae::Vector;

namespace {

GroupedDataset small_bars(int n, double p_miss, std::uint64_t seed) {
  BarsConfig config;
  config.n = n;
  config.size = 4;
  config.p_miss = p_miss;
  config.seed = seed;
  return generate_bars(config);
}

FactVaeModel model_for(const GroupedDataset& d, Index latent, Index hidden,
                       std::uint64_t seed) {
  FactVaeModel m(latent, hidden, d.specs);
  SeededRng rng = SeededRng::derive(seed, 0);
  m.init_params(rng);
  return m;
}

bool models_identical(const FactVaeModel& a, const FactVaeModel& b) {
  for (Index g = 0; g < a.num_groups(); ++g) {
    const auto& na = a.nets(g);
    const auto& nb = b.nets(g);
    if (!(na.enc_w.value == nb.enc_w.value &&
          na.enc_b.value == nb.enc_b.value &&
          na.mean_w.value == nb.mean_w.value &&
          na.mean_b.value == nb.mean_b.value &&
          na.prec_w.value == nb.prec_w.value &&
          na.latent_w.value == nb.latent_w.value &&
          na.dec_w.value == nb.dec_w.value &&
          na.dec_b.value == nb.dec_b.value &&
          na.out_w.value == nb.out_w.value &&
          na.out_b.value == nb.out_b.value &&
          na.obs_logvar.value == nb.obs_logvar.value)) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("a single observed group is always kept") {
  SeededRng rng(1);
  const std::vector<Index> observed{3};
  for (int i = 0; i < 100; ++i) {
    const auto subset =
        factvae::sample_inference_subset(observed, 0.1, rng);
    REQUIRE(subset.size() == 1);
    CHECK(subset[0] == 3);
  }
}

TEST_CASE("q_keep of one keeps everything") {
  SeededRng rng(2);
  const std::vector<Index> observed{0, 2, 5};
  const auto subset = factvae::sample_inference_subset(observed, 1.0, rng);
  CHECK(subset == observed);
}

TEST_CASE("two groups at q_keep 0.5 give each nonempty subset 1/3 mass") {
  SeededRng rng(3);
  const std::vector<Index> observed{0, 1};
  std::map<std::vector<Index>, long> counts;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    ++counts[factvae::sample_inference_subset(observed, 0.5, rng)];
  }
  const double se = std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / n);
  for (const auto& subset :
       {std::vector<Index>{0}, std::vector<Index>{1},
        std::vector<Index>{0, 1}}) {
    const double freq = static_cast<double>(counts[subset]) / n;
    CHECK(std::abs(freq - 1.0 / 3.0) < 3.0 * se);
  }
}

TEST_CASE("subset sampling validates its inputs") {
  SeededRng rng(4);
  CHECK_THROWS_AS(factvae::sample_inference_subset({}, 0.5, rng),
                  std::invalid_argument);
  const std::vector<Index> observed{0};
  CHECK_THROWS_AS(factvae::sample_inference_subset(observed, 0.0, rng),
                  std::invalid_argument);
}

TEST_CASE("adam leaves parameters alone on zero gradients") {
  factvae::ad::Parameter p(2, 2);
  p.value.setConstant(1.5);
  p.zero_grad();
  std::vector<factvae::ad::Parameter*> params{&p};
  factvae::AdamState state(params);
  adam_step(params, state, 0.01);
  CHECK(p.value == factvae::Matrix::Constant(2, 2, 1.5));
}

TEST_CASE("the first adam step moves by about lr in the gradient direction") {
  factvae::ad::Parameter p(3, 1);
  p.value.setZero();
  p.grad.resize(3, 1);
  p.grad << 2.0, -0.5, 1e-3;
  std::vector<factvae::ad::Parameter*> params{&p};
  factvae::AdamState state(params);
  const double lr = 0.01;
  adam_step(params, state, lr);
  CHECK(p.value(0, 0) == doctest::Approx(lr).epsilon(1e-4));
  CHECK(p.value(1, 0) == doctest::Approx(-lr).epsilon(1e-4));
  CHECK(p.value(2, 0) == doctest::Approx(lr).epsilon(1e-4));
}

TEST_CASE("proportional gradients move by equal magnitudes on step one") {
  factvae::ad::Parameter a(1, 1), b(1, 1);
  a.value.setZero();
  b.value.setZero();
  a.grad.resize(1, 1);
  b.grad.resize(1, 1);
  a.grad(0, 0) = 0.3;
  b.grad(0, 0) = 30.0;
  std::vector<factvae::ad::Parameter*> pa{&a}, pb{&b};
  factvae::AdamState sa(pa), sb(pb);
  adam_step(pa, sa, 0.05);
  adam_step(pb, sb, 0.05);
  CHECK(a.value(0, 0) ==
        doctest::Approx(b.value(0, 0)).epsilon(1e-6));
}

TEST_CASE("zero epochs leave the model unchanged with empty history") {
  const GroupedDataset d = small_bars(10, 0.0, 5);
  FactVaeModel m = model_for(d, 3, 4, 6);
  const FactVaeModel before = m;
  TrainConfig config;
  config.epochs = 0;
  config.seed = 6;
  const TrainHistory h = train(d, m, config);
  CHECK(h.epochs.empty());
  CHECK(models_identical(m, before));
}

TEST_CASE("a huge lambda zeroes every coupled column within one epoch") {
  const GroupedDataset d = small_bars(16, 0.0, 7);
  FactVaeModel m = model_for(d, 3, 4, 8);
  TrainConfig config;
  config.lambda = 1e6;
  config.epochs = 1;
  config.minibatch = 8;
  config.seed = 8;
  const TrainHistory h = train(d, m, config);
  REQUIRE(h.epochs.size() == 1);
  CHECK(h.epochs[0].zero_col_fraction == 1.0);
  for (Index g = 0; g < m.num_groups(); ++g) {
    CHECK(m.nets(g).latent_w.value.isZero(0.0));
    CHECK(m.nets(g).prec_w.value.isZero(0.0));
  }
}

TEST_CASE("training is bit-deterministic given the seed") {
  const GroupedDataset d = small_bars(24, 0.25, 9);
  TrainConfig config;
  config.epochs = 3;
  config.minibatch = 8;
  config.seed = 10;

  FactVaeModel m1 = model_for(d, 3, 4, config.seed);
  FactVaeModel m2 = model_for(d, 3, 4, config.seed);
  train(d, m1, config);
  train(d, m2, config);
  CHECK(models_identical(m1, m2));
}

TEST_CASE("missing-group storage is never read") {
  GroupedDataset d = small_bars(30, 0.4, 11);
  GroupedDataset corrupted = d;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (auto& sample : corrupted.samples) {
    for (size_t g = 0; g < sample.present.size(); ++g) {
      if (!sample.present[g]) {
        sample.values[g] = Vector::Constant(d.specs[g].dim, nan);
      }
    }
  }

  TrainConfig config;
  config.epochs = 2;
  config.minibatch = 8;
  config.seed = 12;
  FactVaeModel m1 = model_for(d, 3, 4, config.seed);
  FactVaeModel m2 = model_for(d, 3, 4, config.seed);
  const TrainHistory h1 = train(d, m1, config);
  const TrainHistory h2 = train(corrupted, m2, config);
  CHECK(models_identical(m1, m2));
  REQUIRE(h1.epochs.size() == h2.epochs.size());
  for (size_t e = 0; e < h1.epochs.size(); ++e) {
    CHECK(h1.epochs[e].mean_elbo == h2.epochs[e].mean_elbo);
  }
}

TEST_CASE("columns zeroed by prox stay zero under a zero gradient") {
  // The trainer's coupled-block update is value += eta * grad followed by
  // the prox; with a zero gradient the zero column is a fixed point.
  const Vector zero = Vector::Zero(6);
  const Vector after = factvae::prox_group_lasso(
      zero + 0.05 * Vector::Zero(6), 0.05, 2.0);
  CHECK(after.isZero(0.0));
}

TEST_CASE("history records one entry per epoch and is written as CSV") {
  const GroupedDataset d = small_bars(12, 0.0, 13);
  FactVaeModel m = model_for(d, 2, 3, 14);
  TrainConfig config;
  config.epochs = 4;
  config.minibatch = 6;
  config.seed = 14;
  const TrainHistory h = train(d, m, config);
  REQUIRE(h.epochs.size() == 4);
  for (int e = 0; e < 4; ++e) {
    CHECK(h.epochs[static_cast<size_t>(e)].epoch == e + 1);
    CHECK(h.epochs[static_cast<size_t>(e)].penalty >= 0.0);
    CHECK(std::isfinite(h.epochs[static_cast<size_t>(e)].mean_elbo));
  }
  const std::string path = "test_history.csv";
  write_history_csv(h, path);
  const std::string text = test_util::read_file(path);
  CHECK(text.rfind("epoch,elbo_tilde,penalty,zero_col_fraction\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
  std::remove(path.c_str());
}

TEST_CASE("mismatched dataset and model are rejected") {
  const GroupedDataset d = small_bars(8, 0.0, 15);
  FactVaeModel wrong_dims = test_util::make_model(3, 4, {5, 4, 4, 4}, 16);
  FactVaeModel wrong_count = test_util::make_model(3, 4, {4, 4}, 17);
  TrainConfig config;
  config.epochs = 1;
  CHECK_THROWS_AS(train(d, wrong_dims, config), std::invalid_argument);
  CHECK_THROWS_AS(train(d, wrong_count, config), std::invalid_argument);
}

}  // TEST_SUITE
